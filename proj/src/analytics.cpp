#include "trr/analytics.hpp"

#include "trr/wire.hpp"

#include <cmath>
#include <cstdio>

namespace trr::analytics {

void RouteParams::validate() const
{
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(d) || !unit(f) || d + f > 1.0 + 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "rates must lie in [0,1] with d + f <= 1");
    }
    if (h < 1 || r < 1) throw Error(ErrorCode::InvalidArgument, "hops and routes must be >= 1");
}

double srtr_closed_form(const RouteParams& p)
{
    p.validate();
    return srtr_closed_form(p.d, p.h, p.r);
}

double srd_closed_form(const RouteParams& p)
{
    p.validate();
    return srd_closed_form(p.f, p.h, p.r);
}

double srtr_finite_population(std::uint64_t n, std::uint64_t dishonest, unsigned h, unsigned r)
{
    if (dishonest > n || h > n) throw Error(ErrorCode::InvalidArgument, "pool too small");
    double route_ok = 1.0;
    for (unsigned i = 0; i < h; ++i) {
        if (n - dishonest <= i) return 0.0;
        route_ok *= static_cast<double>(n - dishonest - i) / static_cast<double>(n - i);
    }
    return 1.0 - std::pow(1.0 - route_ok, r);
}

Estimate Estimate::from_counts(std::uint64_t successes, std::uint64_t trials)
{
    Estimate e;
    e.trials = trials;
    e.successes = successes;
    if (trials > 0) {
        e.rate = static_cast<double>(successes) / static_cast<double>(trials);
        e.se = std::sqrt(e.rate * (1.0 - e.rate) / static_cast<double>(trials));
    }
    return e;
}

double Estimate::z_score(double expected) const
{
    double diff = std::abs(rate - expected);
    if (se == 0.0) return diff < 1e-12 ? 0.0 : INFINITY;
    return diff / se;
}

std::vector<SweepRow> sweep(const Grid& grid)
{
    std::vector<SweepRow> rows;
    for (double d : grid.d)
        for (double f : grid.f)
            for (unsigned h : grid.h)
                for (unsigned r : grid.r) {
                    RouteParams p{d, f, h, r};
                    if (d + f > 1.0 + 1e-12) continue;
                    rows.push_back({p, srtr_closed_form(p), srd_closed_form(p), {}, {}});
                }
    return rows;
}

namespace {

void put(std::string& out, double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    out += buf;
}

} // namespace

std::string to_csv(const std::vector<SweepRow>& rows, bool with_mc)
{
    std::string out = "d,f,h,r,srtr_cf,srd_cf";
    if (with_mc) out += ",srtr_mc,srtr_se,srd_mc,srd_se";
    out += '\n';
    for (const auto& row : rows) {
        put(out, row.params.d);
        out += ',';
        put(out, row.params.f);
        out += ',' + std::to_string(row.params.h) + ',' + std::to_string(row.params.r) + ',';
        put(out, row.srtr_cf);
        out += ',';
        put(out, row.srd_cf);
        if (with_mc) {
            for (const auto* e : {&row.srtr_mc, &row.srd_mc}) {
                out += ',';
                if (*e) put(out, (*e)->rate);
                out += ',';
                if (*e) put(out, (*e)->se);
            }
        }
        out += '\n';
    }
    return out;
}

std::uint64_t mixing_stats(std::uint64_t delay_blocks, std::uint64_t tx_per_block)
{
    if (delay_blocks < wire::kMinReleaseDelay || delay_blocks > wire::kMaxReleaseDelay) {
        throw Error(ErrorCode::DelayOutOfRange,
                    "release delay " + std::to_string(delay_blocks) + " outside [1, 5]");
    }
    return delay_blocks * tx_per_block;
}

} // namespace trr::analytics
