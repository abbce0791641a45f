#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpgvd/source.hpp"

namespace cpgvd {

enum class TransformId { T1, T2, T3, T4 };
std::string_view to_string(TransformId id);
std::optional<TransformId> transform_from_string(std::string_view s);  // "T1".."T4", case-insensitive

struct TransformSpec {
  TransformId id = TransformId::T4;
  std::uint64_t seed = 0;
};

/// T3 cannot rewrite the unit (variadic or unnamed parameters, name clash).
class SkipTransform : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Renames every named parameter, and the uses that resolve to it, to a
/// fresh 5-character token (letter first, then [a-z0-9]).
SourceUnit t1_rename_params(const SourceUnit& unit, std::uint64_t seed);

/// Inserts `if (A > B) { int tok = C; }` with A < B at one seeded statement
/// boundary of every function body, on the line of that boundary.
SourceUnit t2_insert_dead(const SourceUnit& unit, std::uint64_t seed);

/// Renames each function f to f_impl in place and appends the forwarder
/// `<signature of f>{return f_impl(args);}` after its closing brace on
/// the same line. A recursive f gets its prototype in front of f_impl so the
/// moved body can keep calling f. Throws SkipTransform when any function
/// cannot be split.
SourceUnit t3_extract_function(const SourceUnit& unit, std::uint64_t seed);

SourceUnit t4_remove_comments(const SourceUnit& unit);

struct TransformResult {
  SourceUnit unit;
  bool skipped = false;
  std::string skip_reason;
  /// old line i+1 -> new line. All four transforms keep lines in place.
  std::vector<int> line_map;
};

/// Dispatches on spec.id; SkipTransform becomes skipped=true with the
/// original unit.
TransformResult apply_transform(const SourceUnit& unit, const TransformSpec& spec);

/// {"transform", "seed", "skipped", "lines": [[old, new], ...]}
std::string line_map_json(const TransformResult& r, const TransformSpec& spec);

}  // namespace cpgvd
