#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aberrant_mix::testing {

struct PropertyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Log-likelihood trace never drops by more than 1e-8 per iteration over
/// `instances` random models with p <= 12 and n <= 300.
PropertyCheck check_em_monotonicity(int instances, std::uint64_t seed);

/// mixture_loglik unchanged within 1e-9 under (L2 Q, Q' nu).
PropertyCheck check_rotation_invariance(int instances, std::uint64_t seed);

/// Responsibility rows nonnegative and summing to 1 within 1e-12, including
/// observations hundreds of log-units from one component.
PropertyCheck check_posterior_rows(int instances, std::uint64_t seed);

/// SGR rows sum to 1 within 1e-12 on the full grid and the extreme style
/// first-order dominates the slight one row by row.
PropertyCheck check_sgr();

/// SE, SP, BACC, MCC against hand arithmetic and BACC = (SE+SP)/2 exactly.
PropertyCheck check_metrics_oracle(std::uint64_t seed);

/// count_params against 3p+pK+q+K+C+1+q(q-1)/2 on the full grid.
PropertyCheck check_count_params_grid();

/// n = 3 toys: log-likelihood and posteriors within 1e-10 of the long-double
/// brute-force oracle.
PropertyCheck check_density_oracle(int instances, std::uint64_t seed);

/// Same seed twice through simulate2 and fit: byte-identical output files.
PropertyCheck check_determinism(const std::filesystem::path& scratch, std::uint64_t seed);

std::vector<PropertyCheck> property_suite(const std::filesystem::path& scratch, std::uint64_t seed);

}  // namespace aberrant_mix::testing
