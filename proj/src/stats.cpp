#include "numsense/stats.hpp"

#include <algorithm>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "numsense/errors.hpp"

namespace numsense::stats {

namespace {

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

double tail_p(double p_less, double p_greater, Alternative alt) {
    switch (alt) {
        case Alternative::Less: return clamp_p(p_less);
        case Alternative::Greater: return clamp_p(p_greater);
        case Alternative::TwoSided: return clamp_p(2.0 * std::min(p_less, p_greater));
    }
    return 1.0;
}

// Sum of t^3 - t over tie groups.
double tie_term(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double term = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        const double t = static_cast<double>(j - i);
        term += t * t * t - t;
        i = j;
    }
    return term;
}

// Normal-approximation tails with a 0.5 continuity correction.
void normal_tails(double stat, double mu, double sd, Alternative alt, TestResult& r) {
    const double dev = stat - mu;
    const double p_greater = 1.0 - normal_cdf((dev - 0.5) / sd);
    const double p_less = normal_cdf((dev + 0.5) / sd);
    r.p_value = tail_p(p_less, p_greater, alt);
    const double corrected = std::max(0.0, std::abs(dev) - 0.5);
    switch (alt) {
        case Alternative::Greater: r.z = (dev - 0.5) / sd; break;
        case Alternative::Less: r.z = (dev + 0.5) / sd; break;
        case Alternative::TwoSided: r.z = std::copysign(corrected, dev) / sd; break;
    }
    r.method = Method::Normal;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double mean(std::span<const double> x) {
    if (x.empty()) throw InsufficientData("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw InsufficientData("standard deviation needs n >= 2");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double median(std::span<const double> x) {
    if (x.empty()) throw InsufficientData("median of an empty sample");
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alt, Path path, std::size_t exact_max) {
    std::vector<double> nonzero;
    for (double d : diffs) {
        if (!std::isfinite(d)) throw DomainError("signed-rank test needs finite differences");
        if (d != 0.0) nonzero.push_back(d);
    }
    if (nonzero.empty()) throw InsufficientData("signed-rank test: all differences are zero");

    const std::size_t n = nonzero.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(nonzero[i]);
    const std::vector<double> ranks = midranks(abs_d);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (nonzero[i] > 0) w_plus += ranks[i];
    }

    TestResult r;
    r.statistic = w_plus;
    r.n = n;
    r.alternative = alt;
    const bool exact = path == Path::Exact || (path == Path::Auto && n <= exact_max);
    if (exact) {
        // Doubled midranks are integers; count sign assignments per doubled sum.
        std::vector<long> dr(n);
        long total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dr[i] = std::lround(2.0 * ranks[i]);
            total += dr[i];
        }
        std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
        counts[0] = 1.0;
        long reach = 0;
        for (long v : dr) {
            for (long s = reach; s >= 0; --s) counts[static_cast<std::size_t>(s + v)] += counts[static_cast<std::size_t>(s)];
            reach += v;
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        const long obs = std::lround(2.0 * w_plus);
        double le = 0.0, ge = 0.0;
        for (long s = 0; s <= total; ++s) {
            if (s <= obs) le += counts[static_cast<std::size_t>(s)];
            if (s >= obs) ge += counts[static_cast<std::size_t>(s)];
        }
        r.p_value = tail_p(le / all, ge / all, alt);
        r.method = Method::Exact;
        return r;
    }
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term(abs_d) / 48.0;
    if (!(var > 0.0)) throw InsufficientData("signed-rank test: degenerate variance");
    normal_tails(w_plus, mu, std::sqrt(var), alt, r);
    return r;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alt, Path path,
                          std::size_t exact_max_total) {
    if (x.empty() || y.empty()) throw InsufficientData("Mann-Whitney U needs two nonempty samples");
    const std::size_t nx = x.size(), ny = y.size(), total = nx + ny;
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    for (double v : pooled) {
        if (!std::isfinite(v)) throw DomainError("Mann-Whitney U needs finite observations");
    }
    const std::vector<double> ranks = midranks(pooled);
    const double offset = static_cast<double>(nx) * (nx + 1) / 2.0;
    const double u_x = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(nx), 0.0) - offset;

    TestResult r;
    r.statistic = u_x;
    r.n = nx;
    r.n2 = ny;
    r.alternative = alt;
    const bool exact = path == Path::Exact || (path == Path::Auto && total <= exact_max_total);
    if (exact) {
        // Enumerate every assignment of nx pooled midranks to the first sample.
        std::vector<char> pick(total, 0);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(nx), 1);
        double le = 0.0, ge = 0.0, all = 0.0;
        const double eps = 1e-9;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < total; ++i) {
                if (pick[i]) s += ranks[i];
            }
            const double u = s - offset;
            all += 1.0;
            if (u <= u_x + eps) le += 1.0;
            if (u >= u_x - eps) ge += 1.0;
        } while (std::prev_permutation(pick.begin(), pick.end()));
        r.p_value = tail_p(le / all, ge / all, alt);
        r.method = Method::Exact;
        return r;
    }
    const double a = static_cast<double>(nx), b = static_cast<double>(ny), nt = static_cast<double>(total);
    const double mu = a * b / 2.0;
    const double var = a * b / 12.0 * ((nt + 1.0) - tie_term(pooled) / (nt * (nt - 1.0)));
    if (!(var > 0.0)) {
        r.p_value = 1.0;
        r.method = Method::Normal;
        r.z = 0.0;
        return r;
    }
    normal_tails(u_x, mu, std::sqrt(var), alt, r);
    return r;
}

TestResult one_sample_t(std::span<const double> x, double mu0, Alternative alt) {
    if (x.size() < 2) throw InsufficientData("t-test needs n >= 2");
    const double m = mean(x);
    const double sd = sample_sd(x);
    if (!(sd > 0.0)) throw InsufficientData("t-test: zero variance");
    const double n = static_cast<double>(x.size());
    const double t = (m - mu0) / (sd / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    TestResult r;
    r.statistic = t;
    r.n = x.size();
    r.dof = n - 1.0;
    r.alternative = alt;
    r.method = Method::StudentT;
    const double p_less = boost::math::cdf(dist, t);
    const double p_greater = boost::math::cdf(boost::math::complement(dist, t));
    r.p_value = tail_p(p_less, p_greater, alt);
    return r;
}

TestResult paired_t(std::span<const double> x, std::span<const double> y, Alternative alt) {
    if (x.size() != y.size()) throw ShapeMismatch("paired t-test needs equal sample sizes");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    return one_sample_t(d, 0.0, alt);
}

TestResult sign_test(std::span<const double> diffs, Alternative alt) {
    std::size_t pos = 0, n = 0;
    for (double d : diffs) {
        if (d == 0.0) continue;
        ++n;
        if (d > 0.0) ++pos;
    }
    if (n == 0) throw InsufficientData("sign test: all differences are zero");
    // Binomial(n, 1/2) tails.
    std::vector<double> pmf(n + 1);
    double c = 1.0;
    for (std::size_t k = 0; k <= n; ++k) {
        pmf[k] = std::ldexp(c, -static_cast<int>(n));
        c = c * static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
    double le = 0.0, ge = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        if (k <= pos) le += pmf[k];
        if (k >= pos) ge += pmf[k];
    }
    TestResult r;
    r.statistic = static_cast<double>(pos);
    r.n = n;
    r.alternative = alt;
    r.method = Method::Binomial;
    r.p_value = tail_p(le, ge, alt);
    return r;
}

namespace {

void check_pair_lengths(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("Kendall tau needs equal-length inputs");
    if (x.size() < 2) throw InsufficientData("Kendall tau needs at least two observations");
}

// Counts pairs i < j with v[i] > v[j] while merge-sorting v.
long long count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<long long>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi), v.begin() + static_cast<long>(lo));
    return inv;
}

long long tied_pairs(const std::vector<double>& sorted) {
    long long ties = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const long long t = static_cast<long long>(j - i);
        ties += t * (t - 1) / 2;
        i = j;
    }
    return ties;
}

}  // namespace

double kendall_tau_a(std::span<const double> x, std::span<const double> y) {
    check_pair_lengths(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });
    long long x_ties = 0, joint_ties = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && x[order[j]] == x[order[i]]) ++j;
        const long long t = static_cast<long long>(j - i);
        x_ties += t * (t - 1) / 2;
        for (std::size_t a = i; a < j;) {
            std::size_t b = a;
            while (b < j && y[order[b]] == y[order[a]]) ++b;
            const long long u = static_cast<long long>(b - a);
            joint_ties += u * (u - 1) / 2;
            a = b;
        }
        i = j;
    }
    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    const long long discordant = count_inversions(ys, buf, 0, n);
    const long long y_ties = tied_pairs(ys);
    const long long total = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    const long long con_minus_dis = total - x_ties - y_ties + joint_ties - 2 * discordant;
    return static_cast<double>(con_minus_dis) / static_cast<double>(total);
}

double kendall_tau_a_naive(std::span<const double> x, std::span<const double> y) {
    check_pair_lengths(x, y);
    const std::size_t n = x.size();
    long long score = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = (x[i] - x[j]) * (y[i] - y[j]);
            score += (s > 0) - (s < 0);
        }
    }
    return static_cast<double>(score) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("Pearson correlation needs equal-length inputs");
    if (x.size() < 2) throw InsufficientData("Pearson correlation needs at least two observations");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("Pearson correlation is undefined for a constant input");
    return sxy / std::sqrt(sxx * syy);
}

Correction bh_fdr(std::span<const double> p_values, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("FDR level must lie in (0, 1)");
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-values must lie in [0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (p_values[order[i]] <= static_cast<double>(i + 1) * q / static_cast<double>(m)) k = i + 1;
    }
    Correction c;
    c.rejected.assign(m, false);
    for (std::size_t i = 0; i < k; ++i) c.rejected[order[i]] = true;
    c.rejected_count = k;
    return c;
}

std::vector<double> bonferroni_adjust(std::span<const double> p_values) {
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) out.push_back(std::min(1.0, p * static_cast<double>(p_values.size())));
    return out;
}

Correction bonferroni(std::span<const double> p_values, double alpha) {
    Correction c;
    for (double p : bonferroni_adjust(p_values)) {
        c.rejected.push_back(p <= alpha);
        c.rejected_count += p <= alpha;
    }
    return c;
}

double cohens_d(std::span<const double> x, std::span<const double> y) {
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    const double sx = sample_sd(x), sy = sample_sd(y);
    const double pooled = std::sqrt(((nx - 1) * sx * sx + (ny - 1) * sy * sy) / (nx + ny - 2));
    return (mean(x) - mean(y)) / pooled;
}

double eta_squared(double ss_effect, double ss_total) {
    if (!(ss_total > 0.0)) throw DomainError("eta squared needs a positive total sum of squares");
    return ss_effect / ss_total;
}

}  // namespace numsense::stats
