#pragma once

// Repeated-measurement statistics: mean, sample standard deviation, Student-t
// margin of error and run-to-run variation.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"

namespace shuntlab {

namespace detail {

// Two-sided Student-t critical values, df = 1..30.
inline constexpr std::array<double, 30> kT90 = {
    6.313752, 2.919986, 2.353363, 2.131847, 2.015048, 1.943180, 1.894579, 1.859548, 1.833113, 1.812461,
    1.795885, 1.782288, 1.770933, 1.761310, 1.753050, 1.745884, 1.739607, 1.734064, 1.729133, 1.724718,
    1.720743, 1.717144, 1.713872, 1.710882, 1.708141, 1.705618, 1.703288, 1.701131, 1.699127, 1.697261};
inline constexpr std::array<double, 30> kT95 = {
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139,
    2.200985,  2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963,
    2.079614,  2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272};
inline constexpr std::array<double, 30> kT99 = {
    63.656741, 9.924843, 5.840909, 4.604095, 4.032143, 3.707428, 3.499483, 3.355387, 3.249836, 3.169273,
    3.105807,  3.054540, 3.012276, 2.976843, 2.946713, 2.920782, 2.898231, 2.878440, 2.860935, 2.845340,
    2.831360,  2.818756, 2.807336, 2.796940, 2.787436, 2.778715, 2.770683, 2.763262, 2.756386, 2.749996};

struct TRow {
    double confidence;
    double z; // normal quantile at the same two-sided level
    const std::array<double, 30>* table;
};

inline constexpr std::array<TRow, 3> kTRows = {{
    {0.90, 1.6448536270, &kT90},
    {0.95, 1.9599639845, &kT95},
    {0.99, 2.5758293035, &kT99},
}};

} // namespace detail

// Two-sided critical value of Student's t. Table lookup for df <= 30, a
// Cornish-Fisher expansion about the normal quantile above that.
inline double t_critical(long df, double confidence) {
    if (df < 1) throw argument_error(fmt::format("t_critical: df must be >= 1, got {}", df));
    const detail::TRow* row = nullptr;
    for (const auto& r : detail::kTRows)
        if (std::abs(r.confidence - confidence) < 1e-9) row = &r;
    if (!row)
        throw argument_error(fmt::format("t_critical: confidence {} not supported (use 0.90, 0.95 or 0.99)", confidence));
    if (df <= 30) return (*row->table)[static_cast<std::size_t>(df - 1)];

    const double z = row->z, nu = static_cast<double>(df);
    const double z2 = z * z, z3 = z2 * z, z5 = z3 * z2, z7 = z5 * z2, z9 = z7 * z2;
    const double g1 = (z3 + z) / 4.0;
    const double g2 = (5 * z5 + 16 * z3 + 3 * z) / 96.0;
    const double g3 = (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / 384.0;
    const double g4 = (79 * z9 + 776 * z7 + 1482 * z5 - 1920 * z3 - 945 * z) / 92160.0;
    return z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu) + g4 / (nu * nu * nu * nu);
}

// (max - min) / mean, in percent.
inline double variation_pct(std::span<const double> samples) {
    if (samples.size() < 2) throw insufficient_samples_error("variation_pct: need at least 2 samples");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    if (mean == 0.0) throw argument_error("variation_pct: undefined for zero mean");
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    return (*hi - *lo) / mean * 100.0;
}

struct CampaignSummary {
    std::size_t n = 0;
    double confidence = 0.95;
    double mean_j = 0.0;
    double sd_j = 0.0;
    double me_j = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> variation_pct; // empty when the mean is zero
    std::vector<double> samples;
};

inline CampaignSummary summarize_campaign(std::span<const double> samples, double confidence = 0.95) {
    if (samples.size() < 2)
        throw insufficient_samples_error(
            fmt::format("summarize_campaign: need at least 2 samples, got {}", samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!std::isfinite(samples[i]))
            throw argument_error(fmt::format("summarize_campaign: sample {} is not finite", i));

    CampaignSummary s;
    s.n = samples.size();
    s.confidence = confidence;
    s.samples.assign(samples.begin(), samples.end());
    const double n = static_cast<double>(s.n);

    // sort before summing so the result does not depend on sample order
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    s.mean_j = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : sorted) ss += (x - s.mean_j) * (x - s.mean_j);
    s.sd_j = std::sqrt(ss / (n - 1.0));
    s.me_j = t_critical(static_cast<long>(s.n) - 1, confidence) * s.sd_j / std::sqrt(n);
    s.ci_low = s.mean_j - s.me_j;
    s.ci_high = s.mean_j + s.me_j;
    if (s.mean_j != 0.0) s.variation_pct = (sorted.back() - sorted.front()) / s.mean_j * 100.0;
    return s;
}

// Five significant digits, trailing zeros kept (28.000, 193.13, 1.4210).
inline std::string display5(double v) { return fmt::format("{:#.5g}", v); }

// samples..., mean, ME
inline std::string campaign_csv_row(const CampaignSummary& s) {
    std::string row;
    for (double x : s.samples) row += display5(x) + ",";
    row += display5(s.mean_j) + "," + display5(s.me_j);
    return row;
}

inline std::string campaign_csv_header(const CampaignSummary& s) {
    std::string h;
    for (std::size_t i = 0; i < s.samples.size(); ++i) h += fmt::format("test{},", i + 1);
    return h + "mean,me";
}

} // namespace shuntlab
