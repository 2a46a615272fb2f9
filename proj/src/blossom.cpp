#include "qec/blossom.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace qec {

namespace {
constexpr int64_t kInf = std::numeric_limits<int64_t>::max() / 4;
}

// The algorithm below maximizes total weight over positive-weight edges
// (weight 0 = no edge), growing alternating trees from all unmatched outer
// roots with dual labels lab_[] and per-root slack caching. Blossoms occupy
// ids n+1..2n. solve() converts minimization into maximization by the
// affine flip w -> BIG - cost, with BIG large enough that perfect matchings
// dominate all smaller ones.

int64_t MinWeightMatching::e_delta(const Edge& e) const {
    return lab_[e.u] + lab_[e.v] - g_[e.u][e.v].w * 2;
}

void MinWeightMatching::update_slack(int u, int x) {
    if (!slack_[x] || e_delta(g_[u][x]) < e_delta(g_[slack_[x]][x]))
        slack_[x] = u;
}

void MinWeightMatching::set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u)
        if (g_[u][x].w > 0 && st_[u] != x && s_[st_[u]] == 0) update_slack(u, x);
}

void MinWeightMatching::q_push(int x) {
    if (x <= n_) {
        queue_.push_back(x);
    } else {
        for (int t : flower_[x]) q_push(t);
    }
}

void MinWeightMatching::set_st(int x, int b) {
    st_[x] = b;
    if (x > n_)
        for (int t : flower_[x]) set_st(t, b);
}

int MinWeightMatching::get_pr(int b, int xr) {
    int pr = static_cast<int>(std::find(flower_[b].begin(), flower_[b].end(),
                                        xr) -
                              flower_[b].begin());
    if (pr % 2 == 1) {
        std::reverse(flower_[b].begin() + 1, flower_[b].end());
        return static_cast<int>(flower_[b].size()) - pr;
    }
    return pr;
}

void MinWeightMatching::set_match(int u, int v) {
    match_[u] = g_[u][v].v;
    if (u > n_) {
        Edge e = g_[u][v];
        int xr = flower_from_[u][e.u];
        int pr = get_pr(u, xr);
        for (int i = 0; i < pr; ++i)
            set_match(flower_[u][i], flower_[u][i ^ 1]);
        set_match(xr, v);
        std::rotate(flower_[u].begin(), flower_[u].begin() + pr,
                    flower_[u].end());
    }
}

void MinWeightMatching::augment(int u, int v) {
    while (true) {
        int xnv = st_[match_[u]];
        set_match(u, v);
        if (!xnv) return;
        set_match(xnv, st_[pa_[xnv]]);
        u = st_[pa_[xnv]];
        v = xnv;
    }
}

int MinWeightMatching::get_lca(int u, int v) {
    for (++vis_stamp_; u || v; std::swap(u, v)) {
        if (u == 0) continue;
        if (vis_[u] == vis_stamp_) return u;
        vis_[u] = vis_stamp_;
        u = st_[match_[u]];
        if (u) u = st_[pa_[u]];
    }
    return 0;
}

void MinWeightMatching::add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    s_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
        flower_[b].push_back(x);
        y = st_[match_[x]];
        flower_[b].push_back(y);
        q_push(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
        flower_[b].push_back(x);
        y = st_[match_[x]];
        flower_[b].push_back(y);
        q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) g_[b][x].w = g_[x][b].w = 0;
    for (int x = 1; x <= n_; ++x) flower_from_[b][x] = 0;
    for (int xs : flower_[b]) {
        for (int x = 1; x <= n_x_; ++x)
            if (g_[b][x].w == 0 || e_delta(g_[xs][x]) < e_delta(g_[b][x])) {
                g_[b][x] = g_[xs][x];
                g_[x][b] = g_[x][xs];
            }
        for (int x = 1; x <= n_; ++x)
            if (flower_from_[xs][x]) flower_from_[b][x] = xs;
    }
    set_slack(b);
}

void MinWeightMatching::expand_blossom(int b) {
    for (int t : flower_[b]) set_st(t, t);
    int xr = flower_from_[b][g_[b][pa_[b]].u];
    int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
        int xs = flower_[b][i];
        int xns = flower_[b][i + 1];
        pa_[xs] = g_[xns][xs].u;
        s_[xs] = 1;
        s_[xns] = 0;
        slack_[xs] = 0;
        set_slack(xns);
        q_push(xns);
    }
    s_[xr] = 1;
    pa_[xr] = pa_[b];
    for (size_t i = static_cast<size_t>(pr) + 1; i < flower_[b].size(); ++i) {
        int xs = flower_[b][i];
        s_[xs] = -1;
        set_slack(xs);
    }
    st_[b] = 0;
}

bool MinWeightMatching::on_found_edge(const Edge& e) {
    int u = st_[e.u];
    int v = st_[e.v];
    if (s_[v] == -1) {
        pa_[v] = e.u;
        s_[v] = 1;
        int nu = st_[match_[v]];
        slack_[v] = slack_[nu] = 0;
        s_[nu] = 0;
        q_push(nu);
    } else if (s_[v] == 0) {
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

bool MinWeightMatching::matching() {
    std::fill(s_.begin(), s_.end(), -1);
    std::fill(slack_.begin(), slack_.end(), 0);
    queue_.clear();
    q_head_ = 0;
    for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && !match_[x]) {
            pa_[x] = 0;
            s_[x] = 0;
            q_push(x);
        }
    if (queue_.empty()) return false;
    while (true) {
        while (q_head_ < queue_.size()) {
            int u = queue_[q_head_++];
            if (s_[st_[u]] == 1) continue;
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
            if (st_[b] == b && s_[b] == 1) d = std::min(d, lab_[b] / 2);
        for (int x = 1; x <= n_x_; ++x)
            if (st_[x] == x && slack_[x]) {
                if (s_[x] == -1)
                    d = std::min(d, e_delta(g_[slack_[x]][x]));
                else if (s_[x] == 0)
                    d = std::min(d, e_delta(g_[slack_[x]][x]) / 2);
            }
        for (int u = 1; u <= n_; ++u) {
            if (s_[st_[u]] == 0) {
                if (lab_[u] <= d) return false;
                lab_[u] -= d;
            } else if (s_[st_[u]] == 1) {
                lab_[u] += d;
            }
        }
        for (int b = n_ + 1; b <= n_x_; ++b)
            if (st_[b] == b) {
                if (s_[b] == 0)
                    lab_[b] += d * 2;
                else if (s_[b] == 1)
                    lab_[b] -= d * 2;
            }
        queue_.clear();
        q_head_ = 0;
        for (int x = 1; x <= n_x_; ++x)
            if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
                e_delta(g_[slack_[x]][x]) == 0)
                if (on_found_edge(g_[slack_[x]][x])) return true;
        for (int b = n_ + 1; b <= n_x_; ++b)
            if (st_[b] == b && s_[b] == 1 && lab_[b] == 0) expand_blossom(b);
    }
}

std::vector<int> MinWeightMatching::solve(
    const std::vector<std::vector<int64_t>>& cost) {
    n_ = static_cast<int>(cost.size());
    if (n_ % 2 != 0)
        throw std::invalid_argument("perfect matching needs an even node count");
    std::vector<int> mate(n_, -1);
    if (n_ == 0) return mate;

    // Affine flip to a maximization problem with all-positive weights.
    int64_t max_cost = 0;
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            if (cost[i][j] != kForbidden) {
                if (cost[i][j] < 0)
                    throw std::invalid_argument("matching costs must be >= 0");
                max_cost = std::max(max_cost, cost[i][j]);
            }
    if (max_cost > kInf / (n_ + 2))
        throw std::invalid_argument("matching costs too large");
    int64_t big = max_cost * (n_ / 2) + 1;

    int size = 2 * n_ + 1;
    g_.assign(size, std::vector<Edge>(size));
    for (int u = 1; u <= n_; ++u)
        for (int v = 1; v <= n_; ++v) {
            int64_t w = 0;
            if (u != v && cost[u - 1][v - 1] != kForbidden)
                w = big - cost[u - 1][v - 1];
            g_[u][v] = {u, v, w};
        }
    lab_.assign(size, 0);
    match_.assign(size, 0);
    slack_.assign(size, 0);
    st_.assign(size, 0);
    pa_.assign(size, 0);
    s_.assign(size, -1);
    vis_.assign(size, 0);
    flower_.assign(size, {});
    flower_from_.assign(size, std::vector<int>(n_ + 1, 0));
    for (int u = 1; u <= n_; ++u) {
        st_[u] = u;
        flower_from_[u][u] = u;
    }
    n_x_ = n_;
    vis_stamp_ = 0;

    int64_t w_max = 0;
    for (int u = 1; u <= n_; ++u)
        for (int v = 1; v <= n_; ++v) w_max = std::max(w_max, g_[u][v].w);
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;

    while (matching()) {
    }

    for (int u = 1; u <= n_; ++u) {
        if (!match_[u])
            throw std::runtime_error(
                "no perfect matching exists over the allowed pairs");
        mate[u - 1] = match_[u] - 1;
    }
    return mate;
}

}  // namespace qec
