#include "qup/matching.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace qup {

namespace {

// Primal-dual blossom algorithm for maximum-weight perfect matching, O(n^3).
// Vertices are 1..n; contracted blossoms take ids n+1..n_x. st[x] maps a node
// to its outermost blossom, S marks tree parity (0 outer, 1 inner, -1 free),
// and e_delta is the dual slack of an edge (weights are doubled so all dual
// variables stay integral).
class Blossom {
 public:
  explicit Blossom(int n) : n_(n), cap_(2 * n + 2) {
    g_.assign(cap_, std::vector<Edge>(cap_));
    for (int u = 0; u < cap_; ++u)
      for (int v = 0; v < cap_; ++v) g_[u][v] = Edge{u, v, 0};
    lab_.assign(cap_, 0);
    match_.assign(cap_, 0);
    slack_.assign(cap_, 0);
    st_.assign(cap_, 0);
    pa_.assign(cap_, 0);
    S_.assign(cap_, -1);
    vis_.assign(cap_, 0);
    flower_.assign(cap_, {});
    flower_from_.assign(cap_, std::vector<int>(n_ + 1, 0));
  }

  void add_edge(int u, int v, int64_t w) { g_[u][v].w = g_[v][u].w = w; }

  // Returns the matched partner of each vertex, or throws if some vertex
  // cannot be matched.
  std::vector<int> solve() {
    n_x_ = n_;
    int64_t w_max = 0;
    for (int u = 1; u <= n_; ++u) {
      st_[u] = u;
      flower_from_[u][u] = u;
      for (int v = 1; v <= n_; ++v) w_max = std::max(w_max, g_[u][v].w);
    }
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;
    int matched = 0;
    while (phase()) ++matched;
    if (2 * matched != n_) throw std::runtime_error("graph has no perfect matching");
    return match_;
  }

 private:
  struct Edge {
    int u = 0, v = 0;
    int64_t w = 0;
  };

  static constexpr int64_t kInf = std::numeric_limits<int64_t>::max() / 4;

  int64_t e_delta(const Edge& e) const { return lab_[e.u] + lab_[e.v] - 2 * g_[e.u][e.v].w; }

  void update_slack(int u, int x) {
    if (!slack_[x] || e_delta(g_[u][x]) < e_delta(g_[slack_[x]][x])) slack_[x] = u;
  }

  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u)
      if (g_[u][x].w > 0 && st_[u] != x && S_[st_[u]] == 0) update_slack(u, x);
  }

  void q_push(int x) {
    if (x <= n_) {
      q_.push_back(x);
      return;
    }
    for (int i : flower_[x]) q_push(i);
  }

  void set_st(int x, int b) {
    st_[x] = b;
    if (x > n_)
      for (int i : flower_[x]) set_st(i, b);
  }

  int get_pr(int b, int xr) {
    int pr = static_cast<int>(std::find(flower_[b].begin(), flower_[b].end(), xr) -
                              flower_[b].begin());
    if (pr % 2 == 1) {
      std::reverse(flower_[b].begin() + 1, flower_[b].end());
      return static_cast<int>(flower_[b].size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    match_[u] = g_[u][v].v;
    if (u <= n_) return;
    Edge e = g_[u][v];
    int xr = flower_from_[u][e.u];
    int pr = get_pr(u, xr);
    for (int i = 0; i < pr; ++i) set_match(flower_[u][i], flower_[u][i ^ 1]);
    set_match(xr, v);
    std::rotate(flower_[u].begin(), flower_[u].begin() + pr, flower_[u].end());
  }

  void augment(int u, int v) {
    while (true) {
      int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    for (++timer_; u || v; std::swap(u, v)) {
      if (u == 0) continue;
      if (vis_[u] == timer_) return u;
      vis_[u] = timer_;
      u = st_[match_[u]];
      if (u) u = st_[pa_[u]];
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    S_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) g_[b][x].w = g_[x][b].w = 0;
    for (int x = 1; x <= n_; ++x) flower_from_[b][x] = 0;
    for (int xs : flower_[b]) {
      // Only present member edges may represent the blossom: duals can go
      // negative here, so an absent edge's fake slack could otherwise win.
      for (int x = 1; x <= n_x_; ++x)
        if (g_[xs][x].w > 0 &&
            (g_[b][x].w == 0 || e_delta(g_[xs][x]) < e_delta(g_[b][x]))) {
          g_[b][x] = g_[xs][x];
          g_[x][b] = g_[x][xs];
        }
      for (int x = 1; x <= n_; ++x)
        if (flower_from_[xs][x]) flower_from_[b][x] = xs;
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (int i : flower_[b]) set_st(i, i);
    int xr = flower_from_[b][g_[b][pa_[b]].u];
    int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      int xs = flower_[b][i];
      int xns = flower_[b][i + 1];
      pa_[xs] = g_[xns][xs].u;
      S_[xs] = 1;
      S_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      q_push(xns);
    }
    S_[xr] = 1;
    pa_[xr] = pa_[b];
    for (int i = pr + 1; i < static_cast<int>(flower_[b].size()); ++i) {
      int xs = flower_[b][i];
      S_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
  }

  bool on_found_edge(const Edge& e) {
    int u = st_[e.u];
    int v = st_[e.v];
    if (S_[v] == -1) {
      pa_[v] = e.u;
      S_[v] = 1;
      int nu = st_[match_[v]];
      slack_[v] = slack_[nu] = 0;
      S_[nu] = 0;
      q_push(nu);
    } else if (S_[v] == 0) {
      int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }

  // One augmentation phase of the multi-tree search. The perfect-matching
  // dual update has no free-vertex bound, so vertex duals may go negative;
  // an unbounded delta means some exposed vertex can never be matched.
  bool phase() {
    std::fill(S_.begin() + 1, S_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin() + 1, slack_.begin() + n_x_ + 1, 0);
    q_.clear();
    for (int x = 1; x <= n_x_; ++x)
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        S_[x] = 0;
        q_push(x);
      }
    if (q_.empty()) return false;
    while (true) {
      while (!q_.empty()) {
        int u = q_.front();
        q_.pop_front();
        if (S_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v)
          if (g_[u][v].w > 0 && st_[u] != st_[v]) {
            if (e_delta(g_[u][v]) == 0) {
              if (on_found_edge(g_[u][v])) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
      }
      int64_t d = kInf;
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && S_[b] == 1) d = std::min(d, lab_[b] / 2);
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x]) {
          if (S_[x] == -1)
            d = std::min(d, e_delta(g_[slack_[x]][x]));
          else if (S_[x] == 0)
            d = std::min(d, e_delta(g_[slack_[x]][x]) / 2);
        }
      if (d >= kInf) throw std::runtime_error("graph has no perfect matching");
      for (int u = 1; u <= n_; ++u) {
        if (S_[st_[u]] == 0)
          lab_[u] -= d;
        else if (S_[st_[u]] == 1)
          lab_[u] += d;
      }
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b) {
          if (S_[b] == 0)
            lab_[b] += 2 * d;
          else if (S_[b] == 1)
            lab_[b] -= 2 * d;
        }
      q_.clear();
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            e_delta(g_[slack_[x]][x]) == 0)
          if (on_found_edge(g_[slack_[x]][x])) return true;
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && S_[b] == 1 && lab_[b] == 0) expand_blossom(b);
    }
  }

  int n_;
  int cap_;
  int n_x_ = 0;
  int timer_ = 0;
  std::vector<std::vector<Edge>> g_;
  std::vector<int64_t> lab_;
  std::vector<int> match_, slack_, st_, pa_, S_, vis_;
  std::vector<std::vector<int>> flower_, flower_from_;
  std::deque<int> q_;
};

}  // namespace

std::vector<std::pair<int, int>> min_weight_perfect_matching(
    int n, const std::vector<WeightedEdge>& edges) {
  if (n < 0 || n % 2 != 0) throw std::invalid_argument("vertex count must be even");
  if (n == 0) return {};
  // Flip to a maximization problem; +1 keeps every present edge weight
  // positive, which the solver uses as its existence flag.
  int64_t w_max = 0;
  for (const auto& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.w < 0) throw std::invalid_argument("edge weights must be nonnegative");
    w_max = std::max(w_max, e.w);
  }
  std::vector<std::vector<int64_t>> best(n, std::vector<int64_t>(n, -1));
  for (const auto& e : edges) {
    if (e.u == e.v) continue;
    int64_t& b = best[e.u][e.v];
    if (b < 0 || e.w < b) b = best[e.v][e.u] = e.w;
  }
  Blossom solver(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (best[u][v] >= 0) solver.add_edge(u + 1, v + 1, w_max + 1 - best[u][v]);
  std::vector<int> match = solver.solve();
  std::vector<std::pair<int, int>> pairs;
  for (int u = 1; u <= n; ++u)
    if (match[u] > u) pairs.emplace_back(u - 1, match[u] - 1);
  return pairs;
}

}  // namespace qup
