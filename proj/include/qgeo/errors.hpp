#pragma once

#include <stdexcept>
#include <string>

namespace qgeo {

// Eigenbasis or closed form undefined at the requested point (e.g. a vanishing
// Hamiltonian field). CLI maps this family to exit code 3.
struct degenerate_error : std::runtime_error {
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

// Quantity undefined exactly at a phase transition (sign functions, 0/0 forms).
struct transition_point_error : degenerate_error {
    explicit transition_point_error(const std::string& what) : degenerate_error(what) {}
};

// Finite-difference step so large that the phase gauge cannot be fixed.
struct step_too_large_error : std::runtime_error {
    explicit step_too_large_error(const std::string& what) : std::runtime_error(what) {}
};

// Inputs violate an exact inequality they are supposed to satisfy
// (uncertainty-relation check in the figure of merit).
struct inconsistency_error : std::runtime_error {
    explicit inconsistency_error(const std::string& what) : std::runtime_error(what) {}
};

// 0/0 coefficient in the closed-form projector construction.
struct coefficient_singularity_error : std::runtime_error {
    explicit coefficient_singularity_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qgeo
