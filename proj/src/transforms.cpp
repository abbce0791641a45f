#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include <json.hpp>

#include "cpgvd/frontend.hpp"
#include "cpgvd/transforms.hpp"

namespace cpgvd {

std::string_view to_string(TransformId id) {
  switch (id) {
    case TransformId::T1: return "T1";
    case TransformId::T2: return "T2";
    case TransformId::T3: return "T3";
    case TransformId::T4: return "T4";
  }
  return "?";
}

std::optional<TransformId> transform_from_string(std::string_view s) {
  if (s.size() != 2 || (s[0] != 'T' && s[0] != 't')) return std::nullopt;
  switch (s[1]) {
    case '1': return TransformId::T1;
    case '2': return TransformId::T2;
    case '3': return TransformId::T3;
    case '4': return TransformId::T4;
  }
  return std::nullopt;
}

namespace {

struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string text;
};

std::string apply_edits(std::string text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    return a.begin != b.begin ? a.begin > b.begin : a.end > b.end;
  });
  for (const auto& e : edits) text.replace(e.begin, e.end - e.begin, e.text);
  return text;
}

SourceUnit with_text(const SourceUnit& unit, std::string text) {
  SourceUnit out = unit;
  out.text = std::move(text);
  return out;
}

// Every identifier-shaped word of the unit, comments and strings included,
// so fresh tokens cannot collide with anything visible to a reader either.
std::set<std::string> words_of(std::string_view text) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_') {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      out.emplace(text.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

class TokenSource {
 public:
  TokenSource(std::uint64_t seed, std::set<std::string> taken)
      : rng_(seed), taken_(std::move(taken)) {}

  std::string fresh() {
    static constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
    static constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (;;) {
      std::string t;
      t.push_back(kLetters[rng_() % kLetters.size()]);
      for (int i = 0; i < 4; ++i) t.push_back(kAlnum[rng_() % kAlnum.size()]);
      if (is_c_keyword(t) || !taken_.insert(t).second) continue;
      return t;
    }
  }

  std::uint64_t next(std::uint64_t bound) { return rng_() % bound; }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> taken_;
};

const AstNode* body_of(const AstNode& fn) {
  for (const auto& c : fn.children)
    if (c.kind == AstKind::Block) return &c;
  return nullptr;
}

// -- T1 ----------------------------------------------------------------------

class ParamUses {
 public:
  ParamUses(std::string_view text, const std::string& param) : text_(text), param_(param) {}

  void walk(const AstNode& n) {
    switch (n.kind) {
      case AstKind::Block:
      case AstKind::For:
        scopes_.emplace_back();
        for (const auto& c : n.children) walk(c);
        scopes_.pop_back();
        return;
      case AstKind::VarDecl:
        // The declarator is in scope inside its own initializer.
        if (!scopes_.empty()) scopes_.back().insert(n.name);
        for (const auto& c : n.children) walk(c);
        return;
      case AstKind::Identifier:
        if (!shadowed() && text_.substr(n.name_begin, n.name_end - n.name_begin) == param_)
          ranges.push_back({n.name_begin, n.name_end, {}});
        for (const auto& c : n.children) walk(c);
        return;
      case AstKind::Call:
        if (n.op != "indirect" && n.name == param_ && !shadowed() &&
            text_.substr(n.name_begin, param_.size()) == param_)
          ranges.push_back({n.name_begin, n.name_begin + param_.size(), {}});
        for (const auto& c : n.children) walk(c);
        return;
      default:
        for (const auto& c : n.children) walk(c);
    }
  }

  std::vector<Edit> ranges;

 private:
  bool shadowed() const {
    for (const auto& s : scopes_)
      if (s.count(param_)) return true;
    return false;
  }

  std::string_view text_;
  const std::string& param_;
  std::vector<std::set<std::string>> scopes_;
};

// -- T2 / T3 helpers ---------------------------------------------------------

std::size_t skip_ws(std::string_view text, std::size_t i) {
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  return i;
}

// Offsets right after each top-level statement of a body (declarators of one
// declaration count once); the first entry is just after the opening brace.
std::vector<std::size_t> statement_boundaries(const AstNode& body, std::string_view stripped) {
  std::vector<std::size_t> out{body.span.begin + 1};
  const auto& items = body.children;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const AstNode& s = items[i];
    if (s.kind == AstKind::Comment || s.kind == AstKind::Directive) continue;
    std::size_t end = s.span.end;
    if (s.kind == AstKind::VarDecl) {
      while (i + 1 < items.size() && items[i + 1].kind == AstKind::VarDecl) {
        std::size_t k = skip_ws(stripped, end);
        if (k >= stripped.size() || stripped[k] != ',') break;
        ++i;
        end = items[i].span.end;
      }
    }
    if (end > 0 && stripped[end - 1] != ';' && stripped[end - 1] != '}' && stripped[end - 1] != ':') {
      std::size_t k = skip_ws(stripped, end);
      if (k < stripped.size() && stripped[k] == ';') end = k + 1;
    }
    out.push_back(end);
  }
  return out;
}

bool returns_void(const std::string& type) {
  std::string rest;
  std::size_t i = 0;
  while (i < type.size()) {
    while (i < type.size() && std::isspace(static_cast<unsigned char>(type[i]))) ++i;
    std::size_t j = i;
    while (j < type.size() && !std::isspace(static_cast<unsigned char>(type[j]))) ++j;
    std::string w = type.substr(i, j - i);
    if (!w.empty() && w != "static" && w != "inline" && w != "extern" && w != "__inline" &&
        w != "__inline__")
      rest += (rest.empty() ? "" : " ") + w;
    i = j;
  }
  return rest == "void";
}

}  // namespace

SourceUnit t1_rename_params(const SourceUnit& unit, std::uint64_t seed) {
  AstNode ast = parse(unit);
  TokenSource tokens(seed, words_of(unit.text));
  std::vector<Edit> edits;
  for (const auto& fn : ast.children) {
    if (fn.kind != AstKind::FunctionDef) continue;
    const AstNode* body = body_of(fn);
    for (const auto& p : fn.children) {
      if (p.kind != AstKind::ParamDecl || p.type == "..." || p.name.empty() ||
          p.name_end <= p.name_begin)
        continue;
      std::string tok = tokens.fresh();
      edits.push_back({p.name_begin, p.name_end, tok});
      if (!body) continue;
      ParamUses uses(unit.text, p.name);
      uses.walk(*body);
      for (auto& r : uses.ranges) edits.push_back({r.begin, r.end, tok});
    }
  }
  return with_text(unit, apply_edits(unit.text, std::move(edits)));
}

SourceUnit t2_insert_dead(const SourceUnit& unit, std::uint64_t seed) {
  AstNode ast = parse(unit);
  std::string stripped = strip_comments(unit).text;
  TokenSource tokens(seed, words_of(unit.text));
  std::vector<Edit> edits;
  for (const auto& fn : ast.children) {
    if (fn.kind != AstKind::FunctionDef) continue;
    const AstNode* body = body_of(fn);
    if (!body) continue;
    std::vector<std::size_t> spots = statement_boundaries(*body, stripped);
    std::size_t at = spots[tokens.next(spots.size())];
    long long a = static_cast<long long>(tokens.next(50));
    long long b = a + 1 + static_cast<long long>(tokens.next(50));
    long long c = static_cast<long long>(tokens.next(100));
    std::string guard = " if (" + std::to_string(a) + " > " + std::to_string(b) + ") { int " +
                        tokens.fresh() + " = " + std::to_string(c) + "; }";
    edits.push_back({at, at, guard});
  }
  return with_text(unit, apply_edits(unit.text, std::move(edits)));
}

SourceUnit t3_extract_function(const SourceUnit& unit, std::uint64_t /*seed*/) {
  AstNode ast = parse(unit);
  std::string stripped = strip_comments(unit).text;
  std::set<std::string> words = words_of(unit.text);
  std::vector<Edit> edits;
  for (const auto& fn : ast.children) {
    if (fn.kind != AstKind::FunctionDef) continue;
    const AstNode* body = body_of(fn);
    if (!body) continue;
    std::vector<std::string> args;
    std::vector<const AstNode*> params;
    for (const auto& p : fn.children)
      if (p.kind == AstKind::ParamDecl) params.push_back(&p);
    for (const AstNode* p : params) {
      if (p->type == "...")
        throw SkipTransform("function '" + fn.name + "' is variadic");
      if (p->name.empty()) {
        if (params.size() == 1 && p->type == "void") continue;
        throw SkipTransform("function '" + fn.name + "' has an unnamed parameter");
      }
      args.push_back(p->name);
    }
    std::string impl = fn.name + "_impl";
    if (words.count(impl)) throw SkipTransform("name '" + impl + "' is already used in the unit");
    if (fn.name_end <= fn.name_begin) throw SkipTransform("function '" + fn.name + "' has no name token");

    std::string sig = stripped.substr(fn.span.begin, body->span.begin - fn.span.begin);
    for (char& ch : sig)
      if (ch == '\n' || ch == '\t') ch = ' ';
    while (!sig.empty() && sig.back() == ' ') sig.pop_back();

    // The body moves untouched; a recursive call then needs f declared
    // ahead of f_impl.
    bool recursive = false;
    visit_preorder(*body, [&](const AstNode& n, int) {
      if (n.kind == AstKind::Call && n.name == fn.name) recursive = true;
      return !recursive;
    });
    if (recursive) edits.push_back({fn.span.begin, fn.span.begin, sig + "; "});
    edits.push_back({fn.name_begin, fn.name_end, impl});

    std::string call = impl + "(";
    for (std::size_t i = 0; i < args.size(); ++i) call += (i ? ", " : "") + args[i];
    call += ")";
    std::string fwd = " " + sig + "{" + (returns_void(fn.type) ? "" : "return ") + call + ";}";
    edits.push_back({body->span.end, body->span.end, fwd});
  }
  return with_text(unit, apply_edits(unit.text, std::move(edits)));
}

SourceUnit t4_remove_comments(const SourceUnit& unit) { return strip_comments(unit); }

TransformResult apply_transform(const SourceUnit& unit, const TransformSpec& spec) {
  TransformResult r;
  try {
    switch (spec.id) {
      case TransformId::T1: r.unit = t1_rename_params(unit, spec.seed); break;
      case TransformId::T2: r.unit = t2_insert_dead(unit, spec.seed); break;
      case TransformId::T3: r.unit = t3_extract_function(unit, spec.seed); break;
      case TransformId::T4: r.unit = t4_remove_comments(unit); break;
    }
  } catch (const SkipTransform& e) {
    r.unit = unit;
    r.skipped = true;
    r.skip_reason = e.what();
  }
  int lines = LineIndex(unit.text).line_count();
  for (int i = 1; i <= lines; ++i) r.line_map.push_back(i);
  return r;
}

std::string line_map_json(const TransformResult& r, const TransformSpec& spec) {
  nlohmann::json lines = nlohmann::json::array();
  for (std::size_t i = 0; i < r.line_map.size(); ++i)
    lines.push_back({static_cast<int>(i) + 1, r.line_map[i]});
  nlohmann::json j{{"transform", to_string(spec.id)},
                   {"seed", spec.seed},
                   {"skipped", r.skipped},
                   {"lines", std::move(lines)}};
  if (r.skipped) j["reason"] = r.skip_reason;
  return j.dump();
}

}  // namespace cpgvd
