#include "pearl/auxinfo.hpp"

#include <algorithm>
#include <cmath>

#include "pearl/error.hpp"

namespace pearl {

namespace {

double row_distance(const Matrix& data, std::size_t i, std::size_t j) {
    const double* a = data.data() + i * data.cols();
    const double* b = data.data() + j * data.cols();
    double s = 0.0;
    for (std::size_t l = 0; l < data.cols(); ++l) {
        const double diff = a[l] - b[l];
        s += diff * diff;
    }
    return std::sqrt(s);
}

void check_unit_cube(const Matrix& data) {
    for (double v : data.flat())
        require(v >= 0.0 && v <= 1.0, ErrorKind::invalid_data,
                "pairwise distance: entries must lie in [0,1]");
}

}  // namespace

double mean_pairwise_distance(const Matrix& data) {
    require(data.rows() >= 2, ErrorKind::invalid_parameter,
            "mean_pairwise_distance: need at least 2 records");
    check_unit_cube(data);
    const std::size_t n = data.rows();
    // Per-row partials reduced in index order afterwards, so the result does
    // not depend on thread count.
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(dynamic, 64)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double local = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) local += row_distance(data, i, j);
        partial[i] = local;
    }
    double sum = 0.0;
    for (double v : partial) sum += v;
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double mean_pairwise_distance_subsampled(const Matrix& data, std::size_t max_pairs, Rng& rng) {
    require(data.rows() >= 2, ErrorKind::invalid_parameter,
            "mean_pairwise_distance: need at least 2 records");
    require(max_pairs >= 1, ErrorKind::invalid_parameter, "subsampled estimate needs pairs >= 1");
    check_unit_cube(data);
    const std::size_t n = data.rows();
    double sum = 0.0;
    for (std::size_t p = 0; p < max_pairs; ++p) {
        const std::size_t i = static_cast<std::size_t>(rng.next_u64() % n);
        std::size_t j = static_cast<std::size_t>(rng.next_u64() % (n - 1));
        if (j >= i) ++j;
        sum += row_distance(data, i, j);
    }
    return sum / static_cast<double>(max_pairs);
}

double pairwise_sensitivity(std::size_t d, std::size_t n) {
    require(n >= 2, ErrorKind::invalid_parameter, "pairwise_sensitivity: n must be >= 2");
    require(d >= 1, ErrorKind::invalid_parameter, "pairwise_sensitivity: d must be >= 1");
    return 2.0 * std::sqrt(static_cast<double>(d)) / static_cast<double>(n);
}

double derive_sigma0(double dp_mean_distance, std::size_t d) {
    require(d >= 1, ErrorKind::invalid_parameter, "derive_sigma0: d must be >= 1");
    require(dp_mean_distance > 0.0, ErrorKind::invalid_parameter,
            "derive_sigma0: mean distance must be > 0 (floor it first)");
    return 1.0 / dp_mean_distance;
}

double AuxReleaser::release_mean_distance(double sigma_aux, Rng& rng, RdpLedger& ledger) {
    require(!mean_released_, ErrorKind::invalid_state,
            "mean pairwise distance already released for this dataset");
    require(sigma_aux >= 0.0, ErrorKind::invalid_parameter, "sigma_aux must be >= 0");
    mean_released_ = true;
    const double exact = mean_pairwise_distance(*data_);
    const double sens = pairwise_sensitivity(data_->cols(), data_->rows());
    double noisy = exact;
    if (sigma_aux > 0.0) {
        noisy += sens * sigma_aux * rng.next_gaussian();
        ledger.charge_gaussian(sens, sens * sigma_aux, "aux-pairwise-mean");
    } else {
        ledger.charge_nonprivate(sens, "aux-pairwise-mean");
    }
    const double floor = kMeanDistanceFloorPerSqrtD * std::sqrt(static_cast<double>(data_->cols()));
    return std::max(noisy, floor);
}

std::vector<double> AuxReleaser::release_label_histogram(std::span<const std::size_t> labels,
                                                         std::size_t class_count, double sigma_aux,
                                                         Rng& rng, RdpLedger& ledger) {
    require(!hist_released_, ErrorKind::invalid_state,
            "label histogram already released for this dataset");
    require(class_count >= 2, ErrorKind::invalid_parameter, "label histogram needs >= 2 classes");
    require(!labels.empty(), ErrorKind::invalid_parameter, "label histogram: no labels");
    require(sigma_aux >= 0.0, ErrorKind::invalid_parameter, "sigma_aux must be >= 0");
    hist_released_ = true;
    const double n = static_cast<double>(labels.size());
    std::vector<double> probs(class_count, 0.0);
    for (std::size_t lab : labels) {
        require(lab < class_count, ErrorKind::invalid_data, "label index out of range");
        probs[lab] += 1.0;
    }
    for (double& p : probs) p /= n;
    // Replacing one record moves two coordinates of the normalized counts by
    // 1/n each: L2 sensitivity sqrt(2)/n.
    const double sens = std::sqrt(2.0) / n;
    if (sigma_aux > 0.0) {
        for (double& p : probs) p += sens * sigma_aux * rng.next_gaussian();
        ledger.charge_gaussian(sens, sens * sigma_aux, "aux-label-hist");
    } else {
        ledger.charge_nonprivate(sens, "aux-label-hist");
    }
    double total = 0.0;
    for (double& p : probs) {
        p = std::max(p, 0.0);
        total += p;
    }
    if (total <= 0.0) {
        std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(class_count));
    } else {
        for (double& p : probs) p /= total;
    }
    return probs;
}

}  // namespace pearl
