#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pearl {

struct LedgerEvent {
    std::string label;
    double sensitivity = 0.0;
    double noise_std = 0.0;  // 0 marks a non-private release
};

// Renyi-DP cost ledger over a fixed order grid. Costs only ever grow; the
// whole pipeline charges it during sanitization and auxiliary releases and
// never afterwards, which is what makes training free post-processing.
class RdpLedger {
public:
    RdpLedger();

    static const std::vector<double>& default_orders();

    // Gaussian mechanism: adds lambda * sensitivity^2 / (2 noise_std^2) at
    // every order.
    void charge_gaussian(double sensitivity, double noise_std, const std::string& label);

    // Non-private sentinel: records the event and makes the converted epsilon
    // infinite.
    void charge_nonprivate(double sensitivity, const std::string& label);

    // Converts the accumulated costs to an (epsilon, delta) guarantee by
    // minimizing over the order grid. Returns 0 for an empty ledger (sets
    // *warned if provided) and +infinity after any non-private charge.
    double to_eps_delta(double delta, bool* warned = nullptr) const;

    bool empty() const noexcept { return events_.empty(); }
    bool unbounded() const noexcept { return unbounded_; }
    const std::vector<double>& orders() const noexcept { return orders_; }
    const std::vector<double>& costs() const noexcept { return costs_; }
    const std::vector<LedgerEvent>& events() const noexcept { return events_; }

    // Used by artifact deserialization.
    static RdpLedger from_parts(std::vector<double> orders, std::vector<double> costs,
                                std::vector<LedgerEvent> events);

private:
    std::vector<double> orders_;
    std::vector<double> costs_;
    std::vector<LedgerEvent> events_;
    bool unbounded_ = false;
};

// Classic Gaussian-mechanism calibration: sigma = sqrt(2 ln(1.25/delta)) / epsilon.
double calibrate_classic(double epsilon, double delta);

struct DpBudget {
    double epsilon = 1.0;
    double delta = 1e-5;
    double split = 0.5;  // fraction of epsilon assigned to the CF release
};

// Noise multipliers for the CF release and for each of the auxiliary
// releases, plus the pre-flight converted epsilon of the simulated ledger.
struct BudgetPlan {
    double sigma_cf = 0.0;
    double sigma_aux = 0.0;
    std::size_t aux_release_count = 0;
    double preflight_epsilon = 0.0;
};

// Calibrates both halves and simulates the full composed ledger before any
// data access; throws budget_violation if the simulated epsilon exceeds the
// budget.
BudgetPlan split_budget(const DpBudget& budget, std::size_t aux_release_count);

}  // namespace pearl
