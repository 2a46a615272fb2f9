#pragma once

#include <cstdint>
#include <vector>

namespace qec {

// Exact minimum-weight perfect matching on a dense graph with integer
// costs, via the O(n^3) primal-dual blossom algorithm (Edmonds' algorithm
// with lazy dual adjustment over a dense cost matrix). Used per shot on the
// complete graph over fired detectors, so n stays small, but the answer
// must be exactly optimal: acceptance tests compare against exhaustive
// enumeration.
class MinWeightMatching {
  public:
    // Marks a forbidden pairing in the cost matrix.
    static constexpr int64_t kForbidden = INT64_MAX;

    // cost: n x n symmetric matrix (diagonal ignored), n even. Returns the
    // mate of each node. Throws if no perfect matching avoids forbidden
    // pairs. Total cost magnitudes must stay below ~2^62 / n.
    std::vector<int> solve(const std::vector<std::vector<int64_t>>& cost);

  private:
    struct Edge {
        int u = 0, v = 0;
        int64_t w = 0;
    };

    int64_t e_delta(const Edge& e) const;
    void update_slack(int u, int x);
    void set_slack(int x);
    void q_push(int x);
    void set_st(int x, int b);
    int get_pr(int b, int xr);
    void set_match(int u, int v);
    void augment(int u, int v);
    int get_lca(int u, int v);
    void add_blossom(int u, int lca, int v);
    void expand_blossom(int b);
    bool on_found_edge(const Edge& e);
    bool matching();

    int n_ = 0, n_x_ = 0;
    std::vector<std::vector<Edge>> g_;
    std::vector<int64_t> lab_;
    std::vector<int> match_, slack_, st_, pa_, s_, vis_;
    std::vector<std::vector<int>> flower_;
    std::vector<std::vector<int>> flower_from_;
    std::vector<int> queue_;
    size_t q_head_ = 0;
    int vis_stamp_ = 0;
};

}  // namespace qec
