#include "ramzzz/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace ramzzz {

double page_access_prob(double accesses_per_slot, double latency_cycles, std::uint64_t slot_cycles) {
    if (slot_cycles == 0) {
        throw std::invalid_argument("slot length must be positive");
    }
    if (accesses_per_slot < 0.0 || latency_cycles < 0.0) {
        throw std::invalid_argument("negative rate or latency");
    }
    double p = latency_cycles * accesses_per_slot / static_cast<double>(slot_cycles);
    return p > 1.0 ? 1.0 : p;
}

double rank_idle_prob(const std::vector<double>& page_probs) {
    double q = 1.0;
    for (double p : page_probs) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument("page probability outside [0,1]");
        }
        q *= 1.0 - p;
    }
    return q;
}

RankAccessProfile make_rank_profile(const std::vector<double>& accesses_per_slot,
                                    double latency_cycles, std::uint64_t slot_cycles) {
    RankAccessProfile profile;
    profile.access_latency = latency_cycles;
    profile.page_probs.reserve(accesses_per_slot.size());
    for (double f : accesses_per_slot) {
        profile.page_probs.push_back(page_access_prob(f, latency_cycles, slot_cycles));
    }
    profile.idle_prob = rank_idle_prob(profile.page_probs);
    return profile;
}

double idle_length_prob(double idle_prob, std::uint64_t k) {
    if (idle_prob < 0.0 || idle_prob > 1.0) {
        throw std::invalid_argument("idle probability outside [0,1]");
    }
    return std::pow(idle_prob, static_cast<double>(k)) * (1.0 - idle_prob);
}

IdleHistogram predict_carry_forward(const IdleHistogram& prev) { return prev; }

IdleHistogram predict_after_migration(const IdleHistogram& prev, double q_old, double q_new,
                                      double latency_cycles) {
    if (q_old < 0.0 || q_old > 1.0 || q_new < 0.0 || q_new > 1.0) {
        throw std::invalid_argument("idle probability outside [0,1]");
    }
    const std::uint64_t T = prev.slot_cycles();
    const double log_qo = std::log(q_old);
    const double log_qn = std::log(q_new);
    const double log_tail_o = std::log1p(-q_old);
    const double log_tail_n = std::log1p(-q_new);

    IdleHistogram rescaled(T);
    for (const auto& [len, cnt] : prev.iter_buckets()) {
        const double i = static_cast<double>(len);
        double log_w_old = i * log_qo + log_tail_o;
        double scaled;
        if (!(log_w_old > -700.0)) {  // W_old underflows; keep the count as-is
            scaled = cnt;
        } else {
            double log_ratio = i * (log_qn - log_qo) + log_tail_n - log_tail_o;
            scaled = cnt * std::exp(log_ratio);
        }
        if (scaled > 0.0) {
            rescaled.add(len, scaled);
        }
    }
    const double occupied = rescaled.weighted_total(latency_cycles);
    if (!(occupied > 0.0)) {
        return predict_carry_forward(prev);
    }
    const double scale = static_cast<double>(T) / occupied;
    IdleHistogram out(T);
    for (const auto& [len, cnt] : rescaled.iter_buckets()) {
        out.add(len, cnt * scale);
    }
    return out;
}

double geometric_fit_r2(const IdleHistogram& hist) {
    auto buckets = hist.iter_buckets();
    if (buckets.size() < 3) {
        return 1.0;
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& [len, cnt] : buckets) {
        sw += cnt;
        sx += cnt * static_cast<double>(len);
        sy += cnt * std::log(cnt);
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [len, cnt] : buckets) {
        const double dx = static_cast<double>(len) - mx;
        sxx += cnt * dx * dx;
        sxy += cnt * dx * (std::log(cnt) - my);
    }
    if (sxx == 0.0) {
        return 1.0;
    }
    const double slope = sxy / sxx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [len, cnt] : buckets) {
        const double y = std::log(cnt);
        const double fit = my + slope * (static_cast<double>(len) - mx);
        ss_res += cnt * (y - fit) * (y - fit);
        ss_tot += cnt * (y - my) * (y - my);
    }
    if (ss_tot == 0.0) {
        return 1.0;
    }
    return 1.0 - ss_res / ss_tot;
}

}  // namespace ramzzz
