#include "bellman/report_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "bellman/grid_io.hpp"

namespace bellman {

nlohmann::json to_json(const RegularityReport& r) {
    return {{"lipschitz_x", r.lipschitz_x}, {"holder_t", r.holder_t}, {"c0_used", r.c0_used}};
}

nlohmann::json to_json(const ComparisonReport& r) {
    return {{"applicable", r.applicable},
            {"note", r.note},
            {"max_violation", r.max_violation},
            {"pass", r.pass}};
}

nlohmann::json to_json(const ConvergenceReport& r) {
    return {{"tau", r.taus},
            {"h", r.hs},
            {"sup_error", r.errors},
            {"order_pairwise", r.pairwise_orders},
            {"fitted_order", r.fitted_order},
            {"fitted_constant", r.fitted_constant},
            {"degenerate", r.degenerate}};
}

nlohmann::json to_json(const EllipticLimitReport& r) {
    return {{"horizons", r.horizons},
            {"gaps", r.gaps},
            {"final_gap", r.final_gap},
            {"geometric_decay", r.geometric_decay}};
}

nlohmann::json to_json(const ObstacleResiduals& r) {
    return {{"operator_positive_part", r.operator_positive_part},
            {"obstacle_violation", r.obstacle_violation},
            {"active_set_residual", r.active_set_residual}};
}

nlohmann::json to_json(const ValidationReport& r) {
    return {{"pass", r.pass},
            {"violations", r.violations},
            {"max_abs_value", r.max_abs_value},
            {"max_space_quotient", r.max_space_quotient},
            {"max_time_quotient_sqrt", r.max_time_quotient_sqrt},
            {"bound_exceeded", r.bound_exceeded}};
}

std::string to_text(const RegularityReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "lipschitz_x" << format_double(r.lipschitz_x) << '\n'
       << std::setw(16) << "holder_t" << format_double(r.holder_t) << '\n'
       << std::setw(16) << "c0_used" << format_double(r.c0_used) << '\n';
    return os.str();
}

std::string to_text(const ConvergenceReport& r) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %-12s %-14s %-10s\n", "h", "tau", "sup_error",
                  "order");
    os << line;
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        if (i == 0) {
            std::snprintf(line, sizeof(line), "%-12.6g %-12.6g %-14.6e %-10s\n", r.hs[i],
                          r.taus[i], r.errors[i], "-");
        } else {
            std::snprintf(line, sizeof(line), "%-12.6g %-12.6g %-14.6e %-10.4f\n", r.hs[i],
                          r.taus[i], r.errors[i], r.pairwise_orders[i - 1]);
        }
        os << line;
    }
    if (r.degenerate) {
        os << "errors at solver noise level; order fit skipped\n";
    } else {
        std::snprintf(line, sizeof(line), "fitted order    %.4f\nfitted constant %.6g\n",
                      r.fitted_order, r.fitted_constant);
        os << line;
    }
    return os.str();
}

std::string convergence_csv(const ConvergenceReport& r) {
    std::ostringstream os;
    os << "h,tau,sup_error,order_pairwise\n";
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        os << format_double(r.hs[i]) << ',' << format_double(r.taus[i]) << ','
           << format_double(r.errors[i]) << ','
           << (i == 0 ? std::string() : format_double(r.pairwise_orders[i - 1])) << '\n';
    }
    return os.str();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

}  // namespace bellman
