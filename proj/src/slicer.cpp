#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>

#include <json.hpp>

#include "cpgvd/frontend.hpp"
#include "cpgvd/metrics.hpp"
#include "cpgvd/slicer.hpp"

namespace cpgvd {

InteracterSet find_interacters(const ExecutionPath& path, const CodePropertyGraph& g) {
  InteracterSet out;
  out.path_lines = path.lines(g);
  for (const auto& n : g.nodes)
    if (n.kind == NodeKind::IDENTIFIER &&
        std::binary_search(out.path_lines.begin(), out.path_lines.end(), n.line))
      out.members.push_back(n.id);
  return out;
}

namespace {

bool is_jump(const CpgNode& n) {
  if (n.kind == NodeKind::RETURN) return true;
  return n.kind == NodeKind::CONTROL_STRUCTURE &&
         (n.name == "goto" || n.name == "break" || n.name == "continue");
}

std::string goto_target(const CpgNode& n) {
  std::size_t i = n.code.find("goto");
  if (i == std::string::npos) return {};
  i += 4;
  while (i < n.code.size() && std::isspace(static_cast<unsigned char>(n.code[i]))) ++i;
  std::size_t j = i;
  while (j < n.code.size() &&
         (std::isalnum(static_cast<unsigned char>(n.code[j])) || n.code[j] == '_'))
    ++j;
  return n.code.substr(i, j - i);
}

// "ring->ops" -> "ring", "*p" -> "p".
std::string base_variable(const std::string& name) {
  std::size_t i = 0;
  while (i < name.size() && (name[i] == '*' || name[i] == '&')) ++i;
  std::size_t j = i;
  while (j < name.size() && (std::isalnum(static_cast<unsigned char>(name[j])) || name[j] == '_'))
    ++j;
  return name.substr(i, j - i);
}

class ClosureBuilder {
 public:
  ClosureBuilder(const CodePropertyGraph& g, const SliceOptions& o, Slice& s)
      : g_(g), opts_(o), s_(s), in_(g.nodes.size(), 0) {}

  void run(const std::vector<int>& targets) {
    for (int t : targets) add(t);
    for (;;) {
      drain();
      std::vector<int> extra;
      for (int c : members_)
        for (int j : g_.successors(c, Layer::CDG))
          if (!in_[static_cast<std::size_t>(j)] && is_jump(g_.node(j)) && carries_no_data(j))
            extra.push_back(j);
      for (int c : members_) {
        const auto& n = g_.node(c);
        if (n.kind != NodeKind::CONTROL_STRUCTURE || n.name != "goto") continue;
        std::string label = goto_target(n);
        for (const auto& l : g_.nodes)
          if (l.kind == NodeKind::LABEL && l.method == n.method && l.name == label &&
              !in_[static_cast<std::size_t>(l.id)])
            extra.push_back(l.id);
      }
      if (extra.empty()) break;
      for (int x : extra) add(x);
    }
    force_declarations();
  }

  std::vector<int> members_;

 private:
  // A jump whose value would drag its own dependencies in is left out.
  bool carries_no_data(int j) const {
    for (const auto& n : g_.nodes)
      if (n.cfg_owner == j && n.id != j &&
          (n.kind == NodeKind::IDENTIFIER || n.kind == NodeKind::CALL))
        return false;
    return true;
  }

  void add(int id) {
    if (id < 0 || in_[static_cast<std::size_t>(id)]) return;
    if (members_.size() >= opts_.max_closure) {
      if (!s_.truncated)
        s_.warnings.push_back("backward closure truncated at " + std::to_string(opts_.max_closure) +
                              " nodes");
      s_.truncated = true;
      return;
    }
    in_[static_cast<std::size_t>(id)] = 1;
    members_.push_back(id);
    queue_.push_back(id);
  }

  void drain() {
    while (!queue_.empty()) {
      int n = queue_.front();
      queue_.pop_front();
      for (int p : g_.predecessors(n, Layer::DDG)) add(p);
      for (int p : g_.predecessors(n, Layer::CDG)) add(p);
      int owner = g_.node(n).cfg_owner;
      if (owner >= 0 && owner != n)
        for (int p : g_.predecessors(owner, Layer::CDG)) add(p);
    }
  }

  void force_declarations() {
    std::vector<int> idents;
    for (int c : members_)
      if (g_.node(c).kind == NodeKind::IDENTIFIER) idents.push_back(c);
    for (int c : idents) {
      const auto& id = g_.node(c);
      std::string var = base_variable(id.name);
      if (var.empty()) continue;
      int best = -1;
      for (const auto& d : g_.nodes) {
        if (d.name != var) continue;
        if (d.kind == NodeKind::PARAM && d.method == id.method) {
          best = d.id;
          break;
        }
        if (d.kind != NodeKind::LOCAL || d.method != id.method) continue;
        // Latest declaration before the use; any one if none precedes it.
        if (best < 0 || (d.begin <= id.begin && d.begin > g_.node(best).begin) ||
            (g_.node(best).begin > id.begin && d.begin <= id.begin))
          best = d.id;
      }
      if (best < 0)
        for (const auto& d : g_.nodes)
          if (d.kind == NodeKind::LOCAL && d.method < 0 && d.name == var) best = d.id;
      if (best >= 0 && !in_[static_cast<std::size_t>(best)]) {
        if (members_.size() >= opts_.max_closure) {
          s_.truncated = true;
          continue;
        }
        in_[static_cast<std::size_t>(best)] = 1;
        members_.push_back(best);
      }
    }
  }

  const CodePropertyGraph& g_;
  const SliceOptions& opts_;
  Slice& s_;
  std::vector<char> in_;
  std::deque<int> queue_;
};

// -- rendering ---------------------------------------------------------------

class Renderer {
 public:
  explicit Renderer(const SourceUnit& unit)
      : text_(strip_comments(unit).text), keep_(text_.size(), 0) {
    ast_ = parse(unit);
  }

  RenderedSlice run() {
    for (const auto& c : ast_.children) {
      if (c.kind == AstKind::FunctionDef) render_function(c);
    }
    render_list(ast_.children, /*file_scope=*/true);
    return emit();
  }

  void set_kept(std::set<std::size_t> kept, std::set<std::size_t> methods) {
    kept_ = std::move(kept);
    methods_ = std::move(methods);
  }

 private:
  void mark(std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e && i < keep_.size(); ++i) keep_[i] = 1;
  }

  bool has_kept(std::size_t b, std::size_t e) const {
    auto it = kept_.lower_bound(b);
    return it != kept_.end() && *it < e;
  }

  std::size_t skip_ws(std::size_t i) const {
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
    return i;
  }

  std::size_t header_end(std::size_t from) const {
    std::size_t i = from;
    while (i < text_.size() && text_[i] != ')') ++i;
    return i < text_.size() ? i + 1 : from;
  }

  void mark_leaf(const AstNode& s) {
    mark(s.span.begin, s.span.end);
    if (s.span.end > 0 && text_[s.span.end - 1] != ';' && s.kind != AstKind::Case &&
        s.kind != AstKind::Label) {
      std::size_t i = skip_ws(s.span.end);
      if (i < text_.size() && text_[i] == ';') mark(i, i + 1);
    }
  }

  void mark_braces(const AstNode& block) {
    mark(block.span.begin, block.span.begin + 1);
    mark(block.span.end - 1, block.span.end);
  }

  // Makes a kept control structure's body syntactically complete.
  void ensure_body(const AstNode& body, bool body_kept) {
    if (body_kept) return;
    if (body.kind == AstKind::Block) mark_braces(body);
    else mark_leaf(body);
  }

  void render_function(const AstNode& fn) {
    if (!methods_.count(fn.span.begin)) return;
    const AstNode* body = nullptr;
    for (const auto& c : fn.children)
      if (c.kind == AstKind::Block) body = &c;
    if (!body) return;
    mark(fn.span.begin, body->span.begin + 1);
    mark(body->span.end - 1, body->span.end);
    render_list(body->children, false);
  }

  bool render_list(const std::vector<AstNode>& items, bool file_scope) {
    bool any = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const AstNode& s = items[i];
      if (s.kind == AstKind::FunctionDef) continue;
      if (s.kind == AstKind::VarDecl) {
        // Declarators sharing one declaration statement render together.
        std::size_t j = i;
        std::size_t end = s.span.end;
        while (j + 1 < items.size() && items[j + 1].kind == AstKind::VarDecl) {
          std::size_t k = skip_ws(end);
          if (k >= text_.size() || text_[k] != ',') break;
          ++j;
          end = items[j].span.end;
        }
        std::size_t k = skip_ws(end);
        std::size_t stop = (k < text_.size() && text_[k] == ';') ? k + 1 : end;
        bool kept = false;
        for (std::size_t x = i; x <= j; ++x)
          if (kept_.count(items[x].span.begin)) kept = true;
        if (kept) {
          mark(s.span.begin, stop);
          any = true;
        }
        i = j;
        continue;
      }
      if (file_scope) continue;
      if (render_stmt(s)) any = true;
    }
    return any;
  }

  bool render_stmt(const AstNode& s) {
    switch (s.kind) {
      case AstKind::Block: {
        bool any = render_list(s.children, false);
        if (any) mark_braces(s);
        return any;
      }
      case AstKind::If: {
        std::size_t hend = header_end(s.children.at(0).span.end);
        bool header = has_kept(s.span.begin, hend);
        bool then_k = render_stmt(s.children.at(1));
        bool else_k = s.children.size() > 2 && render_stmt(s.children[2]);
        if (!(header || then_k || else_k)) return false;
        mark(s.span.begin, hend);
        ensure_body(s.children[1], then_k);
        if (else_k) {
          std::size_t b = s.children[2].span.begin;
          while (b > 0 && std::isspace(static_cast<unsigned char>(text_[b - 1]))) --b;
          if (b >= 4 && text_.compare(b - 4, 4, "else") == 0) mark(b - 4, b);
        }
        return true;
      }
      case AstKind::While:
      case AstKind::Switch: {
        std::size_t hend = header_end(s.children.at(0).span.end);
        bool header = has_kept(s.span.begin, hend);
        bool body = render_stmt(s.children.at(1));
        if (!(header || body)) return false;
        mark(s.span.begin, hend);
        ensure_body(s.children[1], body);
        if (s.kind == AstKind::Switch) mark_case_labels(s.children[1]);
        return true;
      }
      case AstKind::For: {
        std::size_t hend = header_end(s.children.at(2).span.end);
        bool header = has_kept(s.span.begin, hend);
        bool body = render_stmt(s.children.at(3));
        if (!(header || body)) return false;
        mark(s.span.begin, hend);
        ensure_body(s.children[3], body);
        return true;
      }
      case AstKind::Empty:
      case AstKind::Comment:
      case AstKind::Directive:
      case AstKind::TypeDecl:
        return false;
      case AstKind::VarDecl:
        return render_list({s}, false);
      default:
        if (!kept_.count(s.span.begin)) return false;
        mark_leaf(s);
        return true;
    }
  }

  void mark_case_labels(const AstNode& n) {
    for (const auto& c : n.children) {
      if (c.kind == AstKind::Switch) continue;
      if (c.kind == AstKind::Case) mark_leaf(c);
      if (c.kind == AstKind::Block) mark_case_labels(c);
    }
  }

  RenderedSlice emit() const {
    RenderedSlice out;
    LineIndex li(text_);
    for (int line = 1; line <= li.line_count(); ++line) {
      std::size_t b = li.line_begin(line), e = li.line_end(line);
      std::string row;
      bool started = false, gap = false;
      for (std::size_t i = b; i < e; ++i) {
        char c = text_[i];
        bool ws = std::isspace(static_cast<unsigned char>(c));
        if (!keep_[i]) {
          if (started) gap = true;
          continue;
        }
        if (!started) {
          if (ws) continue;
          std::size_t k = b;
          while (k < e && (text_[k] == ' ' || text_[k] == '\t')) row.push_back(text_[k++]);
          started = true;
        } else if (gap && !row.empty() && !std::isspace(static_cast<unsigned char>(row.back())) &&
                   !ws) {
          row.push_back(' ');
        }
        gap = false;
        row.push_back(c);
      }
      while (!row.empty() && std::isspace(static_cast<unsigned char>(row.back()))) row.pop_back();
      if (row.empty()) continue;
      out.text += row;
      out.text.push_back('\n');
      out.line_map.push_back(line);
    }
    return out;
  }

  std::string text_;
  std::vector<char> keep_;
  AstNode ast_;
  std::set<std::size_t> kept_;
  std::set<std::size_t> methods_;
};

}  // namespace

Slice backward_slice(const ExecutionPath& path, const InteracterSet& inter,
                     const CodePropertyGraph& g, const SliceOptions& options) {
  Slice s;
  s.path = path;
  s.interacters = inter;
  std::vector<int> targets = path.nodes;
  targets.insert(targets.end(), inter.members.begin(), inter.members.end());
  ClosureBuilder cb(g, options, s);
  cb.run(targets);
  s.closure = cb.members_;
  std::sort(s.closure.begin(), s.closure.end());
  std::set<int> lines;
  for (int id : s.closure) {
    const auto& n = g.node(id);
    switch (n.kind) {
      case NodeKind::ENTRY:
      case NodeKind::EXIT:
      case NodeKind::METHOD_RETURN:
      case NodeKind::BLOCK:
        continue;
      default:
        if (n.line > 0) lines.insert(n.line);
    }
  }
  s.closure_lines.assign(lines.begin(), lines.end());
  return s;
}

namespace {

// Statement start offsets and method start offsets the renderer keeps.
std::pair<std::set<std::size_t>, std::set<std::size_t>> kept_offsets(const Slice& s,
                                                                      const CodePropertyGraph& g) {
  std::set<std::size_t> kept, methods;
  for (int id : s.closure) {
    const auto& n = g.node(id);
    if (n.method >= 0) methods.insert(g.node(n.method).begin);
    switch (n.kind) {
      case NodeKind::ENTRY:
      case NodeKind::EXIT:
      case NodeKind::METHOD_RETURN:
      case NodeKind::METHOD:
      case NodeKind::PARAM:
      case NodeKind::BLOCK:
        continue;
      default:
        break;
    }
    int stmt = n.cfg_owner >= 0 ? n.cfg_owner : id;
    const auto& st = g.node(stmt);
    if (st.kind == NodeKind::ENTRY || st.kind == NodeKind::EXIT) continue;
    // Short-circuit decision nodes stand for their control structure.
    if (st.kind == NodeKind::CONTROL_STRUCTURE && st.ast_parent >= 0 &&
        g.node(st.ast_parent).kind == NodeKind::CONTROL_STRUCTURE &&
        (st.name == "&&" || st.name == "||")) {
      kept.insert(g.node(st.ast_parent).begin);
      continue;
    }
    kept.insert(st.begin);
  }
  return {kept, methods};
}

}  // namespace

RenderedSlice render_slice_lines(const Slice& s, const SourceUnit& unit,
                                 const CodePropertyGraph* g) {
  if (s.closure.empty()) return {};
  CodePropertyGraph local;
  if (!g) {
    local = build_cpg(unit);
    g = &local;
  }
  auto [kept, methods] = kept_offsets(s, *g);
  Renderer r(unit);
  r.set_kept(std::move(kept), std::move(methods));
  return r.run();
}

std::string render_slice(const Slice& s, const SourceUnit& unit) {
  return render_slice_lines(s, unit).text;
}

double reduction_ratio(int original_loc, int slice_loc) {
  if (original_loc <= 0) throw DivisionGuard("original unit has no lines of code");
  return 100.0 * (1.0 - static_cast<double>(slice_loc) / static_cast<double>(original_loc));
}

double reduction_ratio(const Slice& s) { return reduction_ratio(s.original_loc, s.slice_loc); }

Slice slice_path(const ExecutionPath& path, const CodePropertyGraph& g, const SourceUnit& unit,
                 const SliceOptions& options) {
  InteracterSet inter = find_interacters(path, g);
  Slice s = backward_slice(path, inter, g, options);
  RenderedSlice r = render_slice_lines(s, unit, &g);
  s.rendered_text = std::move(r.text);
  s.line_map = std::move(r.line_map);
  s.original_loc = count_loc(unit.text);
  s.slice_loc = count_loc(s.rendered_text);
  s.reduction_pct = reduction_ratio(s);
  return s;
}

std::string slice_record_json(const std::string& sample_id, const std::string& query_id,
                              const Slice& s) {
  nlohmann::json j{{"sampleId", sample_id},
                   {"queryId", query_id},
                   {"reductionPct", s.reduction_pct},
                   {"renderedText", s.rendered_text},
                   {"pathLines", s.interacters.path_lines},
                   {"closureLines", s.closure_lines}};
  return j.dump();
}

}  // namespace cpgvd
