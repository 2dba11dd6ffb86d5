#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesp/matrix.hpp"

namespace nesp {

enum class MatrixFormat { Csv, IdxImages, RawF32 };

MatrixFormat format_from_name(const std::string& name);
std::string format_name(MatrixFormat fmt);

// Chain of isotropic unit Gaussians in `dim` dimensions; cluster c is centered
// at (c*spacing, 0, ..., 0) and drawn from its own RNG stream so that adding
// clusters never perturbs earlier ones. Returns (n_clusters*per_cluster) rows,
// cluster blocks in order.
Matrix gen_gaussian_chain(std::size_t n_clusters, std::size_t per_cluster,
                          std::size_t dim, double spacing, std::uint64_t seed);

// Cluster index of each row produced by gen_gaussian_chain.
std::vector<int> chain_labels(std::size_t n_clusters, std::size_t per_cluster);

Matrix load_matrix(const std::string& path, MatrixFormat fmt);
Matrix load_csv(const std::string& path);
Matrix load_idx_images(const std::string& path);   // idx3, u8 pixels
Matrix load_raw_f32(const std::string& path);

std::vector<int> load_idx_labels(const std::string& path); // idx1, u8 labels
std::vector<int> load_labels(const std::string& path);     // idx1 or one-int-per-line text

void save_csv(const Matrix& m, const std::string& path);
void save_raw_f32(const Matrix& m, const std::string& path);

// Row-wise concatenation; column counts must agree.
Matrix vstack(const Matrix& a, const Matrix& b);

// First `count` rows selected by a seeded permutation (count >= rows: identity).
Matrix subsample_rows(const Matrix& m, std::size_t count, std::uint64_t seed,
                      std::vector<std::size_t>* picked = nullptr);

} // namespace nesp
