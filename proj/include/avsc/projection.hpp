#pragma once

// 2-D PCA view of the classifier-head weight rows of both branches.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "avsc/checkpoint.hpp"

namespace avsc::harness {

struct Projection {
  std::vector<std::string> labels;
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> eigenvalues{};  // of the covariance X^T X / n, descending
  std::size_t rank = 0;                 // axes actually available (0, 1 or 2)
  std::vector<std::string> warnings;
};

/// Top-2 eigenpairs of a symmetric d x d matrix (row-major) by orthogonal
/// iteration with a 2 x 2 Rayleigh-Ritz step. Eigenvectors are returned as
/// columns of a d x 2 row-major matrix, each with its largest-magnitude
/// entry positive.
struct TopTwo {
  std::array<double, 2> values{};
  std::vector<double> vectors;
  std::size_t iterations = 0;
};
TopTwo top_two_eigen(const std::vector<double>& sym, std::size_t d);

/// Mean-centres `rows` (n rows of width d) and projects them onto the top-2
/// principal axes. With fewer than two non-degenerate axes the missing
/// coordinates are zero and a warning is recorded.
Projection pca_project(const std::vector<std::vector<double>>& rows, std::vector<std::string> labels);

/// Stacks the event-head rows then the object-head rows of the checkpoint.
/// Needs a checkpoint with both branches.
Projection export_projection(const Checkpoint& ckpt);

/// label,kind,index,x,y
void write_projection_csv(const Projection& p, const std::filesystem::path& path);

}  // namespace avsc::harness
