#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cpgvd/cpg.hpp"
#include "cpgvd/detector.hpp"

namespace cpgvd::testing {

/// Every simple DDG path from a source to a target, by plain DFS without
/// pruning or ordering.
std::set<std::vector<int>> brute_force_flows(const CodePropertyGraph& g, const std::vector<int>& sources,
                                             const std::vector<int>& targets);

using DefUse = std::tuple<int, int, std::string>;  // def node, use node, variable

/// Reaching definitions by enumerating CFG paths, for acyclic functions
/// without address-of: defs are PARAMs (at ENTRY), initialized LOCALs and
/// assignment targets; uses are all other IDENTIFIERs.
std::set<DefUse> reaching_defs_oracle(const CodePropertyGraph& g);
/// The graph's DDG edges of the same def -> use shape.
std::set<DefUse> graph_def_use_edges(const CodePropertyGraph& g);

/// Backward PDG closure by fixpoint iteration over the raw edge list. A
/// node's owning statement contributes its CDG predecessors too.
std::set<int> pdg_ancestors(const CodePropertyGraph& g, const std::vector<int>& seeds);

/// Post-dominator control dependence from scratch: Y depends on X when X has
/// a CFG successor that Y post-dominates and Y does not strictly
/// post-dominate X. Post-dominance by "every path to EXIT passes through".
std::set<std::pair<int, int>> control_dependence_oracle(const CodePropertyGraph& g);

/// Evaluates accuracy at every grid point and keeps the first maximum.
double naive_calibrate(const std::vector<LabeledScore>& samples, double step);

}  // namespace cpgvd::testing
