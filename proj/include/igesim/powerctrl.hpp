#pragma once

// Transmit-power allocation. For one hop of senders S broadcasting toward
// receivers M under fixed-power interferers I, pick each sender's power from
// the discrete set P to maximize the worst receiver's "power delta":
//
//   maximize  min_{j in M}  max_{i in S}  10*log10( g_ij*p_i /
//              (sum_{d in S\{i}} g_dj*p_d + sum_{d in I} g_dj*p_d + noise) )
//
// A large delta means some sender dominates at every receiver, which is what
// the capture effect needs. The search is depth-first branch-and-cut with an
// optimistic bound; exhaustive_solve enumerates the whole grid and is the
// verification oracle. Both share one tie-breaking rule (lexicographically
// smallest assignment in sender-id order, ascending power), so they return
// identical assignments, not just identical objectives.
//
// Multi-hop networks are allocated hop by hop from the initiator outward, and
// the final hop reuses the upstream gains transposed (channel symmetry) since
// nothing downstream of it ever measured them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linkmodel.hpp"
#include "units.hpp"

namespace igesim {

struct AllocationProblem {
    std::vector<int> senders;     // S, ascending node ids
    std::vector<int> receivers;   // M, ascending
    std::vector<int> interferers; // I, ascending, disjoint from S
    std::vector<double> interferer_powers_mw; // parallel to interferers
    const InterferenceGraph* gains = nullptr; // estimated gains
    std::vector<double> power_set_mw;         // P, ascending
    double noise_floor_mw = 1e-13;

    void validate() const {
        if (gains == nullptr) throw InvalidInput("allocation: missing gain graph");
        if (senders.empty()) throw InvalidInput("allocation: no senders");
        if (receivers.empty()) throw InvalidInput("allocation: no receivers");
        if (power_set_mw.empty()) throw InvalidInput("allocation: empty power set");
        if (!std::is_sorted(power_set_mw.begin(), power_set_mw.end()))
            throw InvalidInput("allocation: power set must be ascending");
        if (interferer_powers_mw.size() != interferers.size())
            throw InvalidInput("allocation: interferer power list length mismatch");
        for (int s : senders)
            for (int i : interferers)
                if (s == i) throw InvalidInput("allocation: sender/interferer sets overlap");
    }
};

struct AllocationResult {
    std::vector<double> assignment_mw; // parallel to problem.senders
    double delta_db = -std::numeric_limits<double>::infinity();
    std::vector<int> dominant_of; // parallel to problem.receivers
    long nodes_explored = 0;
    long branches_cut = 0;
};

namespace powerctrl_detail {

inline double required_gain(const InterferenceGraph& g, int from, int to) {
    if (!g.has(from, to))
        throw InvalidInput("allocation: missing estimated gain for pair (" +
                           std::to_string(from) + " -> " + std::to_string(to) + ")");
    return g.gain(from, to);
}

// Fixed interference power at each receiver (interferers + noise floor).
inline std::vector<double> fixed_interference_mw(const AllocationProblem& p) {
    std::vector<double> base(p.receivers.size(), p.noise_floor_mw);
    for (std::size_t j = 0; j < p.receivers.size(); ++j)
        for (std::size_t k = 0; k < p.interferers.size(); ++k)
            base[j] += required_gain(*p.gains, p.interferers[k], p.receivers[j]) *
                       p.interferer_powers_mw[k];
    return base;
}

// Sender -> receiver gain table, senders-major.
inline std::vector<double> sender_gain_table(const AllocationProblem& p) {
    std::vector<double> table(p.senders.size() * p.receivers.size());
    for (std::size_t i = 0; i < p.senders.size(); ++i)
        for (std::size_t j = 0; j < p.receivers.size(); ++j)
            table[i * p.receivers.size() + j] =
                required_gain(*p.gains, p.senders[i], p.receivers[j]);
    return table;
}

struct Workspace {
    std::vector<double> gain;  // sender-major gain table
    std::vector<double> fixed; // per-receiver interference + noise
    std::size_t ns = 0, nr = 0;

    explicit Workspace(const AllocationProblem& p)
        : gain(sender_gain_table(p)), fixed(fixed_interference_mw(p)),
          ns(p.senders.size()), nr(p.receivers.size()) {}

    double g(std::size_t i, std::size_t j) const { return gain[i * nr + j]; }
};

// Power delta at receiver j for a complete assignment; returns {delta, argmax
// sender index}. Ties prefer the earlier (lower-id) sender.
inline std::pair<double, std::size_t> delta_at(const Workspace& w,
                                               const std::vector<double>& powers_mw,
                                               std::size_t j) {
    double total = w.fixed[j];
    for (std::size_t i = 0; i < w.ns; ++i) total += w.g(i, j) * powers_mw[i];
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < w.ns; ++i) {
        const double num = w.g(i, j) * powers_mw[i];
        const double d = 10.0 * std::log10(num / (total - num));
        if (d > best) {
            best = d;
            arg = i;
        }
    }
    return {best, arg};
}

inline double min_delta(const Workspace& w, const std::vector<double>& powers_mw) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < w.nr; ++j) worst = std::min(worst, delta_at(w, powers_mw, j).first);
    return worst;
}

// Slack on the branch-and-bound gates only. At an exact tie the optimistic
// bound equals the leaf value in real arithmetic, so an ulp of rounding must
// not cut the branch holding the canonical optimum. Leaf tests stay exact;
// the slack merely tolerates a few extra node visits.
inline constexpr double kBoundSlackDb = 1e-4;

// Optimistic bound for a partial assignment (assigned[i] true => powers fixed):
// every unassigned sender takes its best case per role — max power as the
// dominant candidate, min power as interference.
inline double partial_bound(const Workspace& w, const std::vector<double>& powers_mw,
                            const std::vector<bool>& assigned, double p_min, double p_max) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < w.nr; ++j) {
        double den_min = w.fixed[j];
        for (std::size_t d = 0; d < w.ns; ++d)
            den_min += w.g(d, j) * (assigned[d] ? powers_mw[d] : p_min);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < w.ns; ++i) {
            const double num = w.g(i, j) * (assigned[i] ? powers_mw[i] : p_max);
            const double den = den_min - w.g(i, j) * (assigned[i] ? powers_mw[i] : p_min);
            best = std::max(best, 10.0 * std::log10(num / den));
        }
        worst = std::min(worst, best);
    }
    return worst;
}

struct SearchState {
    const Workspace* w;
    const std::vector<double>* power_set;
    std::vector<std::size_t> order; // sender index visit order
    std::vector<double> powers;
    std::vector<bool> assigned;
    double incumbent = -std::numeric_limits<double>::infinity();
    std::vector<double> incumbent_powers;
    long explored = 0;
    long cuts = 0;
    bool prune = true;
};

inline void dfs(SearchState& st, std::size_t depth) {
    ++st.explored;
    const Workspace& w = *st.w;
    if (depth == st.order.size()) {
        const double d = min_delta(w, st.powers);
        if (d > st.incumbent) {
            st.incumbent = d;
            st.incumbent_powers = st.powers;
        }
        return;
    }
    const std::size_t i = st.order[depth];
    const auto& ps = *st.power_set;
    for (std::size_t k = ps.size(); k-- > 0;) { // high powers first: good incumbents early
        st.powers[i] = ps[k];
        st.assigned[i] = true;
        if (st.prune && st.incumbent > -std::numeric_limits<double>::infinity()) {
            const double bound =
                partial_bound(w, st.powers, st.assigned, ps.front(), ps.back());
            if (bound < st.incumbent - kBoundSlackDb) {
                ++st.cuts;
                st.assigned[i] = false;
                continue;
            }
        }
        dfs(st, depth + 1);
        st.assigned[i] = false;
    }
}

// Depth-first walk in canonical (sender-id, ascending-power) order that stops
// at the first assignment achieving the known optimum — the lexicographically
// smallest optimal assignment under the shared tie-break rule.
inline bool canonical_walk(const Workspace& w, const std::vector<double>& ps, double optimum,
                           std::vector<double>& powers, std::vector<bool>& assigned,
                           std::size_t depth, long& explored) {
    ++explored;
    if (depth == w.ns) return min_delta(w, powers) >= optimum;
    for (double p : ps) {
        powers[depth] = p;
        assigned[depth] = true;
        const double bound = partial_bound(w, powers, assigned, ps.front(), ps.back());
        if (bound >= optimum - kBoundSlackDb &&
            canonical_walk(w, ps, optimum, powers, assigned, depth + 1, explored))
            return true;
        assigned[depth] = false;
    }
    return false;
}

inline AllocationResult finish(const AllocationProblem& p, const Workspace& w,
                               std::vector<double> powers, double delta, long explored,
                               long cuts) {
    AllocationResult res;
    res.assignment_mw = std::move(powers);
    res.delta_db = delta;
    res.nodes_explored = explored;
    res.branches_cut = cuts;
    res.dominant_of.resize(p.receivers.size());
    for (std::size_t j = 0; j < p.receivers.size(); ++j)
        res.dominant_of[j] = p.senders[delta_at(w, res.assignment_mw, j).second];
    return res;
}

} // namespace powerctrl_detail

// Power delta and dominant sender realized at one receiver under a complete
// assignment (mW values parallel to problem.senders).
inline std::pair<double, int> receiver_delta(const AllocationProblem& problem,
                                             const std::vector<double>& assignment_mw,
                                             int receiver) {
    problem.validate();
    if (assignment_mw.size() != problem.senders.size())
        throw InvalidInput("receiver_delta: incomplete assignment");
    const powerctrl_detail::Workspace w(problem);
    std::size_t j = 0;
    while (j < problem.receivers.size() && problem.receivers[j] != receiver) ++j;
    if (j == problem.receivers.size())
        throw InvalidInput("receiver_delta: receiver not in problem");
    const auto [delta, arg] = powerctrl_detail::delta_at(w, assignment_mw, j);
    return {delta, problem.senders[arg]};
}

// Branch-and-cut solver. Senders are branched in descending order of their
// strongest outgoing gain; a branch dies when its optimistic bound cannot beat
// the incumbent. A final canonical walk pins the tie-break.
inline AllocationResult solve(const AllocationProblem& problem, bool enable_pruning = true) {
    problem.validate();
    const powerctrl_detail::Workspace w(problem);

    powerctrl_detail::SearchState st;
    st.w = &w;
    st.power_set = &problem.power_set_mw;
    st.powers.assign(w.ns, problem.power_set_mw.front());
    st.assigned.assign(w.ns, false);
    st.prune = enable_pruning;
    st.order.resize(w.ns);
    for (std::size_t i = 0; i < w.ns; ++i) st.order[i] = i;
    std::vector<double> strongest(w.ns, 0.0);
    for (std::size_t i = 0; i < w.ns; ++i)
        for (std::size_t j = 0; j < w.nr; ++j) strongest[i] = std::max(strongest[i], w.g(i, j));
    std::stable_sort(st.order.begin(), st.order.end(),
                     [&](std::size_t a, std::size_t b) { return strongest[a] > strongest[b]; });

    powerctrl_detail::dfs(st, 0);

    // The DFS pinned the optimal delta; recover the canonical optimal
    // assignment so tie-breaking matches the exhaustive oracle exactly.
    std::vector<double> powers(w.ns, problem.power_set_mw.front());
    std::vector<bool> assigned(w.ns, false);
    long canon_explored = 0;
    powerctrl_detail::canonical_walk(w, problem.power_set_mw, st.incumbent, powers, assigned, 0,
                                     canon_explored);
    return powerctrl_detail::finish(problem, w, powers, st.incumbent,
                                    st.explored + canon_explored, st.cuts);
}

// Full grid enumeration; first strict improvement wins, so the returned
// assignment is the lexicographically smallest optimum.
inline AllocationResult exhaustive_solve(const AllocationProblem& problem) {
    problem.validate();
    double space = 1.0;
    for (std::size_t i = 0; i < problem.senders.size(); ++i) {
        space *= static_cast<double>(problem.power_set_mw.size());
        if (space > 1e6) throw InvalidInput("exhaustive_solve: search space exceeds 1e6");
    }
    const powerctrl_detail::Workspace w(problem);
    std::vector<std::size_t> idx(w.ns, 0);
    std::vector<double> powers(w.ns, problem.power_set_mw.front());
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_powers = powers;
    long explored = 0;
    for (;;) {
        ++explored;
        for (std::size_t i = 0; i < w.ns; ++i) powers[i] = problem.power_set_mw[idx[i]];
        const double d = powerctrl_detail::min_delta(w, powers);
        if (d > best) {
            best = d;
            best_powers = powers;
        }
        std::size_t pos = w.ns;
        while (pos-- > 0) {
            if (++idx[pos] < problem.power_set_mw.size()) break;
            idx[pos] = 0;
            if (pos == 0) {
                return powerctrl_detail::finish(problem, w, best_powers, best, explored, 0);
            }
        }
    }
}

// Hop-by-hop allocation over an estimated graph. Hops 0..d-1 broadcast to the
// next hop with all upstream nodes as fixed interferers; the last hop borrows
// its upstream gains transposed and targets the hop above it.
inline std::vector<double> allocate_multihop(const InterferenceGraph& estimated,
                                             const Topology& topo,
                                             const std::vector<double>& power_set_mw,
                                             double noise_floor_mw) {
    const int d = topo.hops();
    if (d < 1) throw InvalidInput("allocate_multihop: topology needs >= 1 hop");
    const auto by_hop = topo.nodes_by_hop();
    std::vector<double> plan(static_cast<std::size_t>(topo.n()),
                             power_set_mw.empty() ? 0.0 : power_set_mw.back());

    auto stage = [&](const std::vector<int>& senders, const std::vector<int>& receivers,
                     int interferer_hop_limit, const InterferenceGraph& g) {
        AllocationProblem prob;
        prob.senders = senders;
        prob.receivers = receivers;
        for (int h = 0; h < interferer_hop_limit; ++h)
            for (int v : by_hop[static_cast<std::size_t>(h)]) {
                prob.interferers.push_back(v);
                prob.interferer_powers_mw.push_back(plan[static_cast<std::size_t>(v)]);
            }
        prob.gains = &g;
        prob.power_set_mw = power_set_mw;
        prob.noise_floor_mw = noise_floor_mw;
        const AllocationResult res = solve(prob);
        for (std::size_t i = 0; i < senders.size(); ++i)
            plan[static_cast<std::size_t>(senders[i])] = res.assignment_mw[i];
    };

    // Check all needed gains up front so the error can list every missing pair.
    std::vector<std::string> missing;
    auto need = [&](const InterferenceGraph& g, int from, int to) {
        if (!g.has(from, to))
            missing.push_back("(" + std::to_string(from) + " -> " + std::to_string(to) + ")");
    };
    for (int i = 0; i < d; ++i)
        for (int up = 0; up <= i; ++up)
            for (int s : by_hop[static_cast<std::size_t>(up)])
                for (int r : by_hop[static_cast<std::size_t>(i + 1)]) need(estimated, s, r);
    for (int up = 0; up < d; ++up)
        for (int s : by_hop[static_cast<std::size_t>(up)])
            for (int r : by_hop[static_cast<std::size_t>(d - 1)])
                if (up < d - 1) need(estimated, s, r);
    if (!missing.empty()) {
        std::string what = "allocate_multihop: missing estimated gains for pairs:";
        for (const auto& m : missing) what += " " + m;
        throw InvalidInput(what);
    }

    for (int i = 0; i < d; ++i)
        stage(by_hop[static_cast<std::size_t>(i)], by_hop[static_cast<std::size_t>(i + 1)], i,
              estimated);

    // Last hop: no downstream receivers ever measured its gains; channel
    // symmetry lets it borrow the upstream direction's estimates.
    InterferenceGraph sym = estimated;
    for (int m : by_hop[static_cast<std::size_t>(d)])
        for (int l : by_hop[static_cast<std::size_t>(d - 1)]) sym.gain(m, l) = estimated.gain(l, m);
    stage(by_hop[static_cast<std::size_t>(d)], by_hop[static_cast<std::size_t>(d - 1)],
          std::max(d - 1, 0), sym);

    return plan;
}

} // namespace igesim
