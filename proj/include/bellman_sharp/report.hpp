#pragma once

#include <array>
#include <string>

#include <json.hpp>

namespace bellman_sharp {

/// Outcome of a sign/concavity/inequality scan.  `worst_value` is the most
/// violating (or least comfortable) margin seen; `worst_witness` the point
/// that produced it.
struct AuditReport {
    std::string kind;
    double p = 0.0;
    double tau = 0.0;
    long n_samples = 0;
    long n_fail = 0;
    std::array<double, 3> worst_witness{0.0, 0.0, 0.0};
    double worst_value = 0.0;
    std::string note;  // free-form remarks (alternate readings, skips)

    bool pass() const { return n_fail == 0; }

    /// Fold in one sample: `violation` counts as a failure, `margin` competes
    /// for worst (larger = worse).
    void record(bool violation, double margin, const std::array<double, 3>& witness) {
        if (n_samples == 0 || margin > worst_value) {
            worst_value = margin;
            worst_witness = witness;
        }
        ++n_samples;
        if (violation) ++n_fail;
    }

    /// Associative merge for parallel scans.
    void merge(const AuditReport& other) {
        if (other.n_samples == 0) return;
        if (n_samples == 0 || other.worst_value > worst_value) {
            worst_value = other.worst_value;
            worst_witness = other.worst_witness;
        }
        n_samples += other.n_samples;
        n_fail += other.n_fail;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"case", kind},
                         {"p", p},
                         {"tau", tau},
                         {"n_samples", n_samples},
                         {"n_fail", n_fail},
                         {"worst_witness", worst_witness},
                         {"worst_value", worst_value}};
        if (!note.empty()) j["note"] = note;
        return j;
    }
};

} // namespace bellman_sharp
