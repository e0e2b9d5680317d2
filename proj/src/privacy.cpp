#include "pearl/privacy.hpp"

#include <cmath>
#include <limits>

#include "pearl/error.hpp"

namespace pearl {

const std::vector<double>& RdpLedger::default_orders() {
    static const std::vector<double> grid = {1.25, 1.5, 1.75, 2,  2.5, 3,  4,   5,
                                             6,    8,   16,   32, 64,  128, 256, 512};
    return grid;
}

RdpLedger::RdpLedger() : orders_(default_orders()), costs_(orders_.size(), 0.0) {}

RdpLedger RdpLedger::from_parts(std::vector<double> orders, std::vector<double> costs,
                                std::vector<LedgerEvent> events) {
    require(orders.size() == costs.size() && !orders.empty(), ErrorKind::invalid_artifact,
            "ledger: orders/costs size mismatch");
    RdpLedger l;
    l.orders_ = std::move(orders);
    l.costs_ = std::move(costs);
    l.events_ = std::move(events);
    for (const auto& e : l.events_)
        if (e.noise_std == 0.0) l.unbounded_ = true;
    return l;
}

void RdpLedger::charge_gaussian(double sensitivity, double noise_std, const std::string& label) {
    require(sensitivity > 0.0, ErrorKind::invalid_parameter, "charge_gaussian: sensitivity must be > 0");
    require(noise_std > 0.0, ErrorKind::invalid_parameter, "charge_gaussian: noise_std must be > 0");
    const double ratio2 = (sensitivity * sensitivity) / (2.0 * noise_std * noise_std);
    for (std::size_t i = 0; i < orders_.size(); ++i) costs_[i] += orders_[i] * ratio2;
    events_.push_back({label, sensitivity, noise_std});
}

void RdpLedger::charge_nonprivate(double sensitivity, const std::string& label) {
    events_.push_back({label, sensitivity, 0.0});
    unbounded_ = true;
}

double RdpLedger::to_eps_delta(double delta, bool* warned) const {
    require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameter,
            "to_eps_delta: delta must be in (0,1)");
    if (warned) *warned = false;
    if (unbounded_) return std::numeric_limits<double>::infinity();
    if (events_.empty()) {
        if (warned) *warned = true;
        return 0.0;
    }
    // Conversion of Balle et al. (2020): tighter than eps + ln(1/delta)/(l-1)
    // and the form the budget split is verified against.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < orders_.size(); ++i) {
        const double l = orders_[i];
        if (l <= 1.0) continue;
        const double eps = costs_[i] + std::log((l - 1.0) / l) - (std::log(delta) + std::log(l)) / (l - 1.0);
        if (eps < best) best = eps;
    }
    return best < 0.0 ? 0.0 : best;
}

double calibrate_classic(double epsilon, double delta) {
    require(epsilon > 0.0, ErrorKind::invalid_parameter, "calibrate_classic: epsilon must be > 0");
    require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameter,
            "calibrate_classic: delta must be in (0,1)");
    return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

BudgetPlan split_budget(const DpBudget& budget, std::size_t aux_release_count) {
    require(budget.epsilon > 0.0, ErrorKind::invalid_parameter, "budget: epsilon must be > 0");
    require(budget.delta > 0.0 && budget.delta < 1.0, ErrorKind::invalid_parameter,
            "budget: delta must be in (0,1)");
    require(budget.split > 0.0 && budget.split < 1.0, ErrorKind::invalid_parameter,
            "budget: split must be in (0,1)");
    require(aux_release_count >= 1, ErrorKind::invalid_parameter,
            "budget: at least one auxiliary release");

    BudgetPlan plan;
    plan.aux_release_count = aux_release_count;
    const double m = static_cast<double>(aux_release_count);
    plan.sigma_cf = calibrate_classic(budget.epsilon * budget.split, budget.delta / 2.0);
    plan.sigma_aux =
        calibrate_classic(budget.epsilon * (1.0 - budget.split) / m, budget.delta / (2.0 * m));

    // Pre-flight: simulate every charge the pipeline will make. The RDP cost
    // of a release with noise_std = sensitivity * sigma depends only on sigma,
    // so unit sensitivity stands in for the real ones.
    RdpLedger sim;
    sim.charge_gaussian(1.0, plan.sigma_cf, "preflight-cf");
    for (std::size_t i = 0; i < aux_release_count; ++i)
        sim.charge_gaussian(1.0, plan.sigma_aux, "preflight-aux");
    plan.preflight_epsilon = sim.to_eps_delta(budget.delta);
    if (plan.preflight_epsilon > budget.epsilon) {
        fail(ErrorKind::budget_violation,
             "budget pre-flight failed: composed epsilon " + std::to_string(plan.preflight_epsilon) +
                 " exceeds budget " + std::to_string(budget.epsilon));
    }
    return plan;
}

}  // namespace pearl
