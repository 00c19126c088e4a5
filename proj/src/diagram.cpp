#include "mgt/diagram.hpp"

#include <algorithm>
#include <functional>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace mgt {

namespace {

[[noreturn]] void fail(const std::string& what, std::size_t off) {
  throw parse_error("diagram: " + what, off);
}

struct Token {
  enum Kind { ident, lparen, rparen, comma, tilde, dash, eq, semi, end } kind;
  std::string text;
  std::size_t off;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Token::ident, s.substr(i, j - i), i});
      i = j;
      continue;
    }
    Token::Kind k;
    switch (c) {
      case '(': k = Token::lparen; break;
      case ')': k = Token::rparen; break;
      case ',': k = Token::comma; break;
      case '~': k = Token::tilde; break;
      case '-': k = Token::dash; break;
      case '=': k = Token::eq; break;
      case ';': k = Token::semi; break;
      default: fail(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({k, std::string(1, c), i});
    ++i;
  }
  out.push_back({Token::end, "", s.size()});
  return out;
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

DiagramExpr parse_diagram(const std::string& text) {
  DiagramExpr ex;
  ex.source = text;
  auto toks = lex(text);
  std::size_t pos = 0;
  auto peek = [&]() -> const Token& { return toks[pos]; };
  auto take = [&](Token::Kind k, const char* what) -> const Token& {
    if (toks[pos].kind != k) fail(std::string("expected ") + what, toks[pos].off);
    return toks[pos++];
  };

  std::map<std::string, int> vertex_by_name;
  std::map<std::string, std::pair<int, bool>> label_owner;  // -> (vertex, is_hol)

  while (peek().kind == Token::ident) {
    DiagramVertex v;
    const Token& nm = take(Token::ident, "vertex name");
    v.name = nm.text;
    if (vertex_by_name.count(v.name)) fail("duplicate vertex name '" + v.name + "'", nm.off);
    take(Token::lparen, "'('");
    const Token& h = take(Token::ident, "holomorphic label");
    v.hol = h.text;
    take(Token::comma, "','");
    take(Token::tilde, "'~'");
    const Token& a = take(Token::ident, "antiholomorphic label");
    v.antihol = a.text;
    take(Token::rparen, "')'");
    int id = static_cast<int>(ex.vertices.size());
    if (label_owner.count(v.hol)) fail("duplicate label '" + v.hol + "'", h.off);
    label_owner[v.hol] = {id, true};
    if (label_owner.count(v.antihol)) fail("duplicate label '" + v.antihol + "'", a.off);
    label_owner[v.antihol] = {id, false};
    vertex_by_name[v.name] = id;
    ex.vertices.push_back(v);
  }
  if (ex.vertices.empty()) fail("diagram needs at least one vertex", peek().off);

  if (peek().kind == Token::semi) {
    ++pos;
    while (peek().kind == Token::ident) {
      const Token& ta = take(Token::ident, "vertex name");
      take(Token::dash, "'-'");
      const Token& tb = take(Token::ident, "vertex name");
      auto ia = vertex_by_name.find(ta.text);
      if (ia == vertex_by_name.end()) fail("unknown vertex '" + ta.text + "'", ta.off);
      auto ib = vertex_by_name.find(tb.text);
      if (ib == vertex_by_name.end()) fail("unknown vertex '" + tb.text + "'", tb.off);
      if (ia->second == ib->second)
        fail("propagator from '" + ta.text + "' to itself diverges", ta.off);
      ex.edges.push_back({ia->second, ib->second});
      if (peek().kind == Token::comma) ++pos;  // optional separator
    }
  }

  if (peek().kind == Token::semi) {
    ++pos;
    std::set<std::string> used;
    while (peek().kind == Token::ident) {
      const Token& ta = take(Token::ident, "label");
      take(Token::eq, "'='");
      const Token& tb = take(Token::ident, "label");
      if (ta.text == tb.text) fail("contraction must join two distinct labels", ta.off);
      auto la = label_owner.find(ta.text);
      if (la == label_owner.end()) fail("unknown label '" + ta.text + "'", ta.off);
      auto lb = label_owner.find(tb.text);
      if (lb == label_owner.end()) fail("unknown label '" + tb.text + "'", tb.off);
      if (la->second.second == lb->second.second)
        fail("contraction must join a holomorphic to an antiholomorphic label", ta.off);
      for (const auto& t : {ta, tb})
        if (!used.insert(t.text).second) fail("label '" + t.text + "' contracted twice", t.off);
      DiagramArc arc;
      if (la->second.second) {
        arc.hol_vertex = la->second.first;
        arc.hol = ta.text;
        arc.antihol_vertex = lb->second.first;
        arc.antihol = tb.text;
      } else {
        arc.hol_vertex = lb->second.first;
        arc.hol = tb.text;
        arc.antihol_vertex = la->second.first;
        arc.antihol = ta.text;
      }
      ex.arcs.push_back(arc);
      if (peek().kind == Token::comma) ++pos;  // optional separator
    }
  }
  if (peek().kind != Token::end) fail("trailing input", peek().off);

  // connectivity of the combined propagator + contraction graph
  UnionFind uf(static_cast<int>(ex.vertices.size()));
  for (const auto& e : ex.edges) uf.unite(e.a, e.b);
  for (const auto& a : ex.arcs) uf.unite(a.hol_vertex, a.antihol_vertex);
  for (std::size_t v = 1; v < ex.vertices.size(); ++v)
    if (uf.find(static_cast<int>(v)) != uf.find(0))
      fail("diagram is disconnected (vertex '" + ex.vertices[v].name + "')", 0);
  return ex;
}

cplx DiagramValue::scalar() const {
  if (!labels.empty()) throw validation_error("diagram-scalar", "value has free indices; not a scalar");
  return data.at(0);
}

cplx DiagramValue::at(const std::vector<int>& idx) const {
  if (idx.size() != labels.size()) throw validation_error("diagram-index", "index arity mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= g) throw validation_error("diagram-index", "index out of range");
    flat = flat * static_cast<std::size_t>(g) + static_cast<std::size_t>(idx[k]);
  }
  return data.at(flat);
}

namespace {

std::size_t pow_sz(int g, std::size_t k) {
  std::size_t r = 1;
  while (k--) r *= static_cast<std::size_t>(g);
  return r;
}

struct Tensor {
  std::vector<std::string> labels;
  std::vector<cplx> data;  // row-major, axes of length g
};

Tensor permute_tensor(const Tensor& t, const std::vector<std::string>& to, int g) {
  if (to == t.labels) return t;
  const std::size_t n = t.labels.size();
  std::vector<std::size_t> stride_of(n, 1), src_stride(n, 1);
  for (std::size_t k = n; k-- > 1;) stride_of[k - 1] = stride_of[k] * static_cast<std::size_t>(g);
  for (std::size_t k = 0; k < n; ++k) {
    auto it = std::find(t.labels.begin(), t.labels.end(), to[k]);
    if (it == t.labels.end()) throw validation_error("diagram-internal", "axis permutation mismatch");
    src_stride[k] = stride_of[static_cast<std::size_t>(it - t.labels.begin())];
  }
  Tensor out;
  out.labels = to;
  out.data.resize(t.data.size());
  std::vector<int> digit(n, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
    out.data[flat] = t.data[src];
    for (std::size_t k = n; k-- > 0;) {
      if (++digit[k] < g) {
        src += src_stride[k];
        break;
      }
      digit[k] = 0;
      src -= src_stride[k] * static_cast<std::size_t>(g - 1);
    }
  }
  return out;
}

struct Component {
  std::vector<int> verts;                  // global vertex ids, appearance order
  std::vector<std::pair<int, int>> edges;  // local endpoints, multiplicity kept
  bool cycle = false;
  std::vector<bool> removed;               // cycle comps: peeled (hanging) vertices
  int root = 0;                            // tree comps
  long solves = 0;
};

struct Msg {
  std::vector<std::string> labels;
  Eigen::MatrixXcd fields;  // n_vertices x g^{labels}
};

class Evaluator {
 public:
  Evaluator(const SurfaceState& st, const DiagramExpr& ex, const DiagramOptions& opt)
      : st_(st), ex_(ex), opt_(opt), g_(st.g()) {}

  DiagramValue run() {
    plan();
    check_budget();
    std::vector<Tensor> parts;
    parts.reserve(comps_.size());
    for (auto& c : comps_) parts.push_back(evaluate_component(c));

    std::set<std::string> bound;
    for (const auto& a : ex_.arcs) {
      bound.insert(a.hol);
      bound.insert(a.antihol);
    }
    std::vector<std::string> free_labels;
    for (const auto& v : ex_.vertices)
      for (const auto& lab : {v.hol, v.antihol})
        if (!bound.count(lab)) free_labels.push_back(lab);

    DiagramValue out;
    out.g = g_;
    out.labels = free_labels;
    out.cost = cost_;
    if (parts.size() == 1 && ex_.arcs.empty()) {
      out.data = std::move(parts[0].data);
      return out;
    }

    const std::size_t nf = free_labels.size(), na = ex_.arcs.size();
    std::map<std::string, std::size_t> var_of;
    for (std::size_t k = 0; k < nf; ++k) var_of[free_labels[k]] = k;
    for (std::size_t k = 0; k < na; ++k) {
      var_of[ex_.arcs[k].hol] = nf + k;
      var_of[ex_.arcs[k].antihol] = nf + k;
    }
    struct Lookup {
      const Tensor* t;
      std::vector<std::size_t> var;
    };
    std::vector<Lookup> lk;
    for (const auto& p : parts) {
      Lookup l;
      l.t = &p;
      for (const auto& lab : p.labels) l.var.push_back(var_of.at(lab));
      lk.push_back(std::move(l));
    }
    out.data.assign(pow_sz(g_, nf), cplx(0.0));
    std::vector<int> digit(nf + na, 0);
    const std::size_t total = pow_sz(g_, nf + na);
    for (std::size_t it = 0; it < total; ++it) {
      cplx prod = 1.0;
      for (const auto& l : lk) {
        std::size_t flat = 0;
        for (std::size_t ax = 0; ax < l.var.size(); ++ax)
          flat = flat * static_cast<std::size_t>(g_) + static_cast<std::size_t>(digit[l.var[ax]]);
        prod *= l.t->data[flat];
      }
      std::size_t of = 0;
      for (std::size_t k = 0; k < nf; ++k)
        of = of * static_cast<std::size_t>(g_) + static_cast<std::size_t>(digit[k]);
      out.data[of] += prod;
      for (std::size_t k = nf + na; k-- > 0;) {
        if (++digit[k] < g_) break;
        digit[k] = 0;
      }
    }
    return out;
  }

 private:
  // ---------------- planning ----------------
  std::vector<std::vector<int>> adjacency(const Component& c) const {
    std::vector<std::vector<int>> adj(c.verts.size());
    for (const auto& e : c.edges) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
    return adj;
  }

  // Solve count for a rooted forest: every non-root vertex with children
  // sends g^{2 * subtree size} Green-solved fields; leaves reuse the cache.
  long forest_solves(const std::vector<std::vector<int>>& adj, const std::vector<int>& roots,
                     const std::vector<bool>* restrict_to) const {
    const std::size_t n = adj.size();
    std::vector<int> parent(n, -2), order, size(n, 1);
    std::vector<int> stack;
    for (int r : roots) {
      parent[r] = -1;
      stack.push_back(r);
    }
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (int w : adj[v]) {
        if (parent[w] != -2) continue;
        if (restrict_to && !(*restrict_to)[w]) continue;
        parent[w] = v;
        stack.push_back(w);
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if (parent[*it] >= 0) size[parent[*it]] += size[*it];
    long solves = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (parent[v] < 0) continue;  // root or untouched
      bool has_child = false;
      for (int w : adj[v])
        if (parent[w] == static_cast<int>(v)) has_child = true;
      if (has_child) solves += static_cast<long>(pow_sz(g_, 2 * static_cast<std::size_t>(size[v])));
    }
    return solves;
  }

  long tree_root_cost(const Component& c, int root) const {
    return forest_solves(adjacency(c), {root}, nullptr);
  }

  int choose_root(const Component& c) const {
    const int n = static_cast<int>(c.verts.size());
    switch (opt_.order) {
      case ReductionOrder::forward: return n - 1;
      case ReductionOrder::reverse: return 0;
      case ReductionOrder::automatic: break;
    }
    int best = 0;
    long best_cost = tree_root_cost(c, 0);
    for (int r = 1; r < n; ++r) {
      long cr = tree_root_cost(c, r);
      if (cr < best_cost) {
        best = r;
        best_cost = cr;
      }
    }
    return best;
  }

  std::vector<bool> peel(const Component& c) const {
    const int n = static_cast<int>(c.verts.size());
    std::vector<int> degree(n, 0);
    for (const auto& e : c.edges) {
      ++degree[e.first];
      ++degree[e.second];
    }
    std::vector<bool> removed(n, false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int v = 0; v < n; ++v)
        if (!removed[v] && degree[v] == 1) {
          removed[v] = true;
          changed = true;
          degree[v] = 0;
          for (const auto& e : c.edges) {
            if (e.first == v && !removed[e.second]) --degree[e.second];
            if (e.second == v && !removed[e.first]) --degree[e.first];
          }
        }
    }
    return removed;
  }

  void plan() {
    const int nv = static_cast<int>(ex_.vertices.size());
    UnionFind uf(nv);
    for (const auto& e : ex_.edges) uf.unite(e.a, e.b);
    std::map<int, int> comp_of_root;
    for (int v = 0; v < nv; ++v) {
      int r = uf.find(v);
      if (!comp_of_root.count(r)) {
        comp_of_root[r] = static_cast<int>(comps_.size());
        comps_.emplace_back();
      }
      comps_[comp_of_root[r]].verts.push_back(v);
    }
    for (const auto& e : ex_.edges) {
      Component& c = comps_[comp_of_root[uf.find(e.a)]];
      auto local = [&](int v) {
        return static_cast<int>(std::find(c.verts.begin(), c.verts.end(), v) - c.verts.begin());
      };
      c.edges.emplace_back(local(e.a), local(e.b));
    }
    const double n_nodes = static_cast<double>(st_.mesh.total_nodes());
    const double n = st_.n_vertices();
    for (auto& c : comps_) {
      const std::size_t V = c.verts.size(), E = c.edges.size();
      if (E + 1 < V) throw validation_error("diagram-internal", "component not connected");
      if (E >= V + 1)
        throw config_error("diagram component has " + std::to_string(E) + " propagators on " +
                           std::to_string(V) +
                           " vertices (more than one independent loop); refusing");
      c.cycle = (E == V);
      cost_.terms += n_nodes * 2.0 * static_cast<double>(V) * static_cast<double>(g_) *
                     static_cast<double>(g_);
      if (c.cycle) {
        cost_.dense_kernel = true;
        c.removed = peel(c);
        std::vector<int> cyc_roots;
        for (std::size_t v = 0; v < V; ++v)
          if (!c.removed[v]) cyc_roots.push_back(static_cast<int>(v));
        // hanging forests rooted at the cycle vertices still need solves
        c.solves = forest_solves(adjacency(c), cyc_roots, &c.removed);
        std::size_t k = cyc_roots.size();
        // hoisted cycle evaluation: (k-2) chained n^3 products per middle
        // label combination, plus an n^2 Hadamard/batch pass per leaf
        double mid_combos = static_cast<double>(pow_sz(g_, 2 * V >= 4 ? 2 * V - 4 : 0));
        double gemm_flops =
            k <= 2 ? 0.0 : static_cast<double>(k - 2) * mid_combos * n * n * n;
        cost_.terms += gemm_flops + n * n * (mid_combos + 1.0) *
                                        static_cast<double>(pow_sz(g_, 4));
      } else {
        c.root = choose_root(c);
        c.solves = tree_root_cost(c, c.root);
      }
      cost_.solves += c.solves;
    }
    const std::size_t n_free = 2 * ex_.vertices.size() - 2 * ex_.arcs.size();
    cost_.terms += static_cast<double>(pow_sz(g_, n_free + ex_.arcs.size())) *
                   static_cast<double>(std::max<std::size_t>(comps_.size(), 1));
  }

  void check_budget() const {
    if (cost_.solves > opt_.max_solves)
      throw config_error("diagram needs " + std::to_string(cost_.solves) +
                         " Green solves (budget " + std::to_string(opt_.max_solves) + ")");
    if (cost_.dense_kernel && st_.n_vertices() > opt_.max_dense_vertices)
      throw config_error("diagram cycle needs a dense Green kernel on " +
                         std::to_string(st_.n_vertices()) + " vertices (budget " +
                         std::to_string(opt_.max_dense_vertices) + ")");
    if (cost_.terms > opt_.max_terms)
      throw config_error("diagram evaluation needs about " +
                         std::to_string(static_cast<long long>(cost_.terms)) +
                         " operations (budget " +
                         std::to_string(static_cast<long long>(opt_.max_terms)) + ")");
  }

  // ---------------- samplers ----------------
  const Eigen::MatrixXcd& node_density() {
    if (dens_.size() == 0) {
      const auto nodes = static_cast<Eigen::Index>(st_.mesh.total_nodes());
      dens_.resize(nodes, g_ * g_);
      const auto& psi = st_.basis.psi_values;  // g x nodes
      for (int a = 0; a < g_; ++a)
        for (int b = 0; b < g_; ++b)
          dens_.col(a * g_ + b) =
              cplx(0.0, -2.0) *
              psi.row(a).transpose().cwiseProduct(psi.row(b).transpose().conjugate());
    }
    return dens_;
  }

  const Eigen::SparseMatrix<cplx>& interp_c() {
    if (interp_c_.rows() == 0) {
      Eigen::SparseMatrix<double> P = node_interpolation_matrix(st_.mesh);
      interp_c_ = P.cast<cplx>();
      Eigen::SparseMatrix<double> Pt = P.transpose();
      Eigen::SparseMatrix<double> W = Pt * st_.node_weights.asDiagonal();
      assembler_ = W.cast<cplx>();
    }
    return interp_c_;
  }

  const Eigen::SparseMatrix<cplx>& assembler() {
    interp_c();
    return assembler_;
  }

  const Eigen::MatrixXcd& kernel_c() {
    if (kernel_.size() == 0)
      kernel_ = st_.laplacian->green_kernel_dense(opt_.max_dense_vertices).cast<cplx>();
    return kernel_;
  }

  // Node samples of the vertex density times the interpolated child
  // messages; label order [hol, antihol, child labels...].
  Eigen::MatrixXcd vertex_node_samples(int global_vertex, const std::vector<Msg>& child_msgs,
                                       std::vector<std::string>* labels_out) {
    const auto& vx = ex_.vertices[global_vertex];
    labels_out->clear();
    labels_out->push_back(vx.hol);
    labels_out->push_back(vx.antihol);
    std::vector<Eigen::MatrixXcd> child_nodes;
    std::size_t combos = static_cast<std::size_t>(g_) * g_;
    for (const auto& m : child_msgs) {
      labels_out->insert(labels_out->end(), m.labels.begin(), m.labels.end());
      child_nodes.emplace_back(interp_c() * m.fields);
      combos *= static_cast<std::size_t>(m.fields.cols());
    }
    const auto& D = node_density();
    Eigen::MatrixXcd S(D.rows(), static_cast<Eigen::Index>(combos));
    std::vector<std::size_t> rest(child_nodes.size());
    for (std::size_t k = 0; k < child_nodes.size(); ++k)
      rest[k] = static_cast<std::size_t>(child_nodes[k].cols());
    std::vector<std::size_t> sub(child_nodes.size());
    for (std::size_t flat = 0; flat < combos; ++flat) {
      std::size_t rem = flat;
      for (std::size_t k = child_nodes.size(); k-- > 0;) {
        sub[k] = rem % rest[k];
        rem /= rest[k];
      }
      Eigen::VectorXcd col = D.col(static_cast<Eigen::Index>(rem));
      for (std::size_t k = 0; k < child_nodes.size(); ++k)
        col = col.cwiseProduct(child_nodes[k].col(static_cast<Eigen::Index>(sub[k])));
      S.col(static_cast<Eigen::Index>(flat)) = col;
    }
    return S;
  }

  // ---------------- trees ----------------
  Msg subtree_message(const Component& c, const std::vector<std::vector<int>>& adj, int v,
                      int parent, const std::vector<bool>* restrict_to) {
    std::vector<int> children;
    for (int w : adj[v])
      if (w != parent && (!restrict_to || (*restrict_to)[w])) children.push_back(w);
    const auto& vx = ex_.vertices[c.verts[v]];
    if (children.empty()) {
      Msg m;
      m.labels = {vx.hol, vx.antihol};
      m.fields = st_.green_fields;  // cached potentials of psi_a ^ conj(psi_b)
      return m;
    }
    std::vector<Msg> kids;
    kids.reserve(children.size());
    for (int w : children) kids.push_back(subtree_message(c, adj, w, v, restrict_to));
    Msg m;
    Eigen::MatrixXcd S = vertex_node_samples(c.verts[v], kids, &m.labels);
    double res = 0.0;
    m.fields = st_.laplacian->green_apply_batch(assembler() * S, &res);
    return m;
  }

  Tensor tree_tensor(const Component& c) {
    Tensor t;
    if (c.verts.size() == 1) {
      const auto& vx = ex_.vertices[c.verts[0]];
      t.labels = {vx.hol, vx.antihol};
      t.data.resize(pow_sz(g_, 2));
      for (int a = 0; a < g_; ++a)
        for (int b = 0; b < g_; ++b)
          t.data[static_cast<std::size_t>(a) * g_ + b] = st_.wedge_loads.col(a * g_ + b).sum();
      return t;
    }
    auto adj = adjacency(c);
    std::vector<Msg> kids;
    for (int w : adj[c.root]) kids.push_back(subtree_message(c, adj, w, c.root, nullptr));
    Eigen::MatrixXcd S = vertex_node_samples(c.verts[c.root], kids, &t.labels);
    Eigen::VectorXcd vals = S.transpose() * st_.node_weights.cast<cplx>();
    t.data.assign(vals.data(), vals.data() + vals.size());
    return t;
  }

  // ---------------- cycles ----------------
  Tensor cycle_tensor(const Component& c) {
    const auto& removed = c.removed;
    std::vector<int> cyc;
    for (std::size_t v = 0; v < c.verts.size(); ++v)
      if (!removed[v]) cyc.push_back(static_cast<int>(v));
    if (cyc.size() < 2) throw validation_error("diagram-internal", "degenerate propagator cycle");
    auto adj = adjacency(c);

    std::vector<std::vector<std::string>> labels_v(cyc.size());
    std::vector<Eigen::MatrixXcd> loads_v(cyc.size());
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      std::vector<Msg> hang;
      for (int w : adj[cyc[i]])
        if (removed[w]) hang.push_back(subtree_message(c, adj, w, cyc[i], &removed));
      Eigen::MatrixXcd S = vertex_node_samples(c.verts[cyc[i]], hang, &labels_v[i]);
      loads_v[i] = assembler() * S;
    }

    // order the cycle vertices by walking unused cycle edges
    std::vector<bool> used(c.edges.size(), false);
    auto find_edge = [&](int from) -> int {
      for (std::size_t e = 0; e < c.edges.size(); ++e) {
        if (used[e]) continue;
        const auto& ed = c.edges[e];
        if (removed[ed.first] || removed[ed.second]) continue;
        if (ed.first == from) return static_cast<int>(e);
        if (ed.second == from) return static_cast<int>(e);
      }
      return -1;
    };
    std::vector<std::size_t> path;
    auto cyc_index = [&](int local) {
      return static_cast<std::size_t>(std::find(cyc.begin(), cyc.end(), local) - cyc.begin());
    };
    int cur = cyc[0];
    path.push_back(0);
    while (path.size() < cyc.size()) {
      int e = find_edge(cur);
      if (e < 0) throw validation_error("diagram-internal", "failed to order propagator cycle");
      used[e] = true;
      cur = (c.edges[e].first == cur) ? c.edges[e].second : c.edges[e].first;
      path.push_back(cyc_index(cur));
    }

    const Eigen::MatrixXcd& K = kernel_c();
    const std::size_t k = path.size();
    std::vector<std::size_t> m(k);
    std::size_t combos = 1;
    Tensor t;
    for (std::size_t i = 0; i < k; ++i) {
      m[i] = static_cast<std::size_t>(loads_v[path[i]].cols());
      combos *= m[i];
      const auto& ls = labels_v[path[i]];
      t.labels.insert(t.labels.end(), ls.begin(), ls.end());
    }
    t.data.assign(combos, cplx(0.0));

    if (k == 2) {
      Eigen::MatrixXcd KK = K.cwiseProduct(K);
      Eigen::MatrixXcd val = loads_v[path[0]].transpose() * (KK * loads_v[path[1]]);
      for (std::size_t c1 = 0; c1 < m[0]; ++c1)
        for (std::size_t c2 = 0; c2 < m[1]; ++c2)
          t.data[c1 * m[1] + c2] =
              val(static_cast<Eigen::Index>(c1), static_cast<Eigen::Index>(c2));
    } else {
      // Chain the middle vertices through matrix products, hoisting the
      // kernel GEMMs out of the first/last label loops: for fixed middle
      // labels, T(p,s) accumulates the propagator chain from vertex 0 to
      // vertex k-1, and the whole (c_0, c_{k-1}) block is two batched
      // products L0^T (T . K^T) L_{k-1}.
      const Eigen::MatrixXcd KT = K.transpose();
      const Eigen::MatrixXcd& L0 = loads_v[path[0]];
      const Eigen::MatrixXcd& Lk = loads_v[path[k - 1]];
      std::vector<std::size_t> stride(k, 1);
      for (std::size_t i = k - 1; i-- > 0;) stride[i] = stride[i + 1] * m[i + 1];
      std::function<void(std::size_t, const Eigen::MatrixXcd&, std::size_t)> rec =
          [&](std::size_t i, const Eigen::MatrixXcd& T, std::size_t base) {
            if (i == k - 1) {
              Eigen::MatrixXcd block = L0.transpose() * T.cwiseProduct(KT) * Lk;
              for (std::size_t c0 = 0; c0 < m[0]; ++c0)
                for (std::size_t cK = 0; cK < m[k - 1]; ++cK)
                  t.data[base + c0 * stride[0] + cK] =
                      block(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(cK));
              return;
            }
            for (std::size_t ci = 0; ci < m[i]; ++ci) {
              Eigen::VectorXcd L = loads_v[path[i]].col(static_cast<Eigen::Index>(ci));
              Eigen::MatrixXcd next = (T * L.asDiagonal()) * K;
              rec(i + 1, next, base + ci * stride[i]);
            }
          };
      rec(1, K, 0);
    }
    return t;
  }

  Tensor evaluate_component(const Component& c) {
    Tensor t = c.cycle ? cycle_tensor(c) : tree_tensor(c);
    std::vector<std::string> appearance;
    for (int v : c.verts) {
      appearance.push_back(ex_.vertices[v].hol);
      appearance.push_back(ex_.vertices[v].antihol);
    }
    return permute_tensor(t, appearance, g_);
  }

  const SurfaceState& st_;
  const DiagramExpr& ex_;
  DiagramOptions opt_;
  int g_;
  std::vector<Component> comps_;
  DiagramCost cost_;
  Eigen::MatrixXcd dens_;
  Eigen::SparseMatrix<cplx> interp_c_;
  Eigen::SparseMatrix<cplx> assembler_;
  Eigen::MatrixXcd kernel_;
};

}  // namespace

DiagramValue evaluate_diagram(const SurfaceState& state, const DiagramExpr& expr,
                              const DiagramOptions& options) {
  Evaluator ev(state, expr, options);
  return ev.run();
}

}  // namespace mgt
