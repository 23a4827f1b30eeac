#pragma once

#include <cstddef>
#include <ostream>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sunflower/stability.hpp"

namespace sunflower {

enum class CurveKind { H1, H2 };

std::string_view to_string(CurveKind kind);
CurveKind curve_from_string(std::string_view name);

struct MBracket {
    double lo;
    double hi;
};

struct ThresholdOptions {
    ScanOptions scan;  ///< horizon and grid for the inner g(tau) scans
    double tangency_rel_tol = 1e-6;
    double escape_rel_tol = 1e-4;
};

/// Smallest m at which g(tau) - tau reaches zero on (0, T_max]: the S / SS boundary h2(l).
double tangency_threshold_h2(double l, double alpha, MBracket bracket, const ThresholdOptions& options = {});

struct EscapeThreshold {
    double m;
    double T_max;
};

/// m above which g(T_max) < T_max: the SS / SSR boundary h1(l) relative to the horizon.
EscapeThreshold escape_threshold_h1(double l, double alpha, MBracket bracket, double T_max,
                                    const ThresholdOptions& options = {});

/// min over (0, T_max] of g(tau) - tau, grid scan with golden-section refinement of the smallest sample.
double min_gap(const PlaneParams& p, const ScanOptions& scan);

struct BifurcationCurve {
    double alpha = 0.0;
    CurveKind which = CurveKind::H2;
    std::vector<std::pair<double, double>> samples;  ///< (l, m)
    std::vector<double> gaps;                        ///< l values whose threshold could not be bracketed
    double horizon = 0.0;
    ThresholdOptions options;
};

struct TraceOptions {
    ThresholdOptions threshold;
    /// Evaluate samples concurrently without warm-starting.
    bool parallel = false;
    std::size_t threads = 0;
    std::size_t max_widenings = 6;
};

BifurcationCurve trace_curve(double alpha, std::pair<double, double> l_range, std::size_t n_points, CurveKind which,
                             const TraceOptions& options = {});

void write_curve_csv(std::ostream& out, const BifurcationCurve& curve, std::string_view tool_version);
nlohmann::json curve_metadata(const BifurcationCurve& curve);

}  // namespace sunflower
