#include "xing/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace xing {

namespace {

void require_nonempty(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.empty() || b.empty()) throw std::invalid_argument(std::string(who) + ": empty sample");
}

struct Ranked {
    std::vector<std::int64_t> doubled_rank;  // pooled order: a first, then b
    double tie_term = 0.0;                   // sum of t^3 - t over tie groups
};

// Doubled midranks keep everything integral: a tie group spanning 1-based
// ranks i..j gets i + j.
Ranked rank_pooled(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    Ranked r;
    r.doubled_rank.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const auto dr = static_cast<std::int64_t>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) r.doubled_rank[order[k]] = dr;
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    return r;
}

// 2U for sample a, from its doubled rank sum.
std::int64_t doubled_u(const Ranked& r, std::size_t n) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += r.doubled_rank[i];
    const auto nn = static_cast<std::int64_t>(n);
    return s - nn * (nn + 1);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

std::string_view to_string(TestKind k) {
    return k == TestKind::WelchT ? "welch_t" : "mann_whitney_u";
}

Aggregate aggregate_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate_of: empty selection");
    Aggregate ag;
    ag.n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    ag.mean = sum / ag.n;
    if (ag.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - ag.mean) * (v - ag.mean);
        ag.std_error = std::sqrt(ss / (ag.n - 1)) / std::sqrt(static_cast<double>(ag.n));
    }
    ag.values = std::move(values);
    return ag;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    require_nonempty(a, b, "mann_whitney_u");
    const double nm = static_cast<double>(a.size()) * static_cast<double>(b.size());
    return nm <= kExactMannWhitneyLimit ? mann_whitney_u_exact(a, b) : mann_whitney_u_normal(a, b);
}

TestResult mann_whitney_u_exact(std::span<const double> a, std::span<const double> b) {
    require_nonempty(a, b, "mann_whitney_u");
    const Ranked r = rank_pooled(a, b);
    const std::size_t n = a.size(), m = b.size(), total = n + m;
    const std::int64_t u2 = doubled_u(r, n);
    const auto nm = static_cast<std::int64_t>(n * m);
    const std::int64_t observed = std::abs(u2 - nm);

    // Distribution of the doubled rank sum of a k-subset, k = min(n, m). The
    // deviation |2U - nm| is the same whichever sample is counted.
    const std::size_t k = std::min(n, m);
    std::int64_t max_sum = 0;
    {
        std::vector<std::int64_t> sorted = r.doubled_rank;
        std::sort(sorted.rbegin(), sorted.rend());
        for (std::size_t i = 0; i < k; ++i) max_sum += sorted[i];
    }
    const auto width = static_cast<std::size_t>(max_sum + 1);
    std::vector<std::uint64_t> dp((k + 1) * width, 0);
    dp[0] = 1;
    for (std::size_t item = 0; item < total; ++item) {
        const auto w = static_cast<std::size_t>(r.doubled_rank[item]);
        for (std::size_t j = std::min(k, item + 1); j >= 1; --j) {
            std::uint64_t* to = &dp[j * width];
            const std::uint64_t* from = &dp[(j - 1) * width];
            for (std::size_t s = w; s < width; ++s) to[s] += from[s - w];
        }
    }
    const auto kk = static_cast<std::int64_t>(k);
    std::uint64_t extreme = 0, all = 0;
    for (std::size_t s = 0; s < width; ++s) {
        const std::uint64_t c = dp[k * width + s];
        if (c == 0) continue;
        all += c;
        const std::int64_t dev = std::abs(static_cast<std::int64_t>(s) - kk * (kk + 1) - nm);
        if (dev >= observed) extreme += c;
    }
    TestResult res;
    res.kind = TestKind::MannWhitneyU;
    res.statistic = static_cast<double>(u2) / 2.0;
    res.p_value = static_cast<double>(extreme) / static_cast<double>(all);
    res.exact = true;
    return res;
}

TestResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b) {
    require_nonempty(a, b, "mann_whitney_u");
    const Ranked r = rank_pooled(a, b);
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    const double total = n + m;
    const double u = static_cast<double>(doubled_u(r, a.size())) / 2.0;
    double var = n * m / 12.0 * (total + 1.0);
    if (total > 1.0) var -= n * m * r.tie_term / (12.0 * total * (total - 1.0));
    TestResult res;
    res.kind = TestKind::MannWhitneyU;
    res.statistic = u;
    if (var <= 0.0) {
        res.p_value = 1.0;  // every value tied
        return res;
    }
    const double dev = std::max(0.0, std::fabs(u - n * m / 2.0) - 0.5);
    res.p_value = std::min(1.0, 2.0 * normal_sf(dev / std::sqrt(var)));
    return res;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided: df must be > 0");
    if (std::isnan(t)) throw std::invalid_argument("student_t_two_sided: t is NaN");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: need >= 2 values per sample");
    const auto moments = [](std::span<const double> x) {
        const double n = static_cast<double>(x.size());
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss / (n - 1.0)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double qa = va / static_cast<double>(a.size());
    const double qb = vb / static_cast<double>(b.size());
    TestResult res;
    res.kind = TestKind::WelchT;
    const double se2 = qa + qb;
    if (se2 == 0.0) {
        // Both samples constant: identical means are indistinguishable,
        // different means are separated with certainty.
        res.statistic = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
        res.p_value = ma == mb ? 1.0 : 0.0;
        return res;
    }
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 /
                      (qa * qa / static_cast<double>(a.size() - 1) +
                       qb * qb / static_cast<double>(b.size() - 1));
    res.statistic = t;
    res.p_value = std::clamp(student_t_two_sided(t, df), 0.0, 1.0);
    return res;
}

}  // namespace xing
