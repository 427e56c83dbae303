#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "posedist/rotkit.hpp"

namespace posedist {

using CellId = std::uint64_t;

/// Equi-volumetric partition of SO(3): nested HEALPix cells on the direction
/// R*z crossed with equal slices of the in-plane angle psi of the ZYZ
/// decomposition R = Rz(phi) Ry(theta) Rz(psi). Level k has 72 * 8^k cells
/// and parent(child) == child >> 3.
class So3Grid {
 public:
  static constexpr int kMaxLevel = 8;

  explicit So3Grid(int level);

  int level() const { return level_; }
  std::uint64_t cell_count() const { return 72ull << (3 * level_); }

  CellId bin_of(const Rotation& r) const;
  /// Cell-centre rotation.
  Rotation representative(CellId cell) const;

  static CellId parent(CellId cell) { return cell >> 3; }

  /// Nominal angular cell width (pi/3) / 2^k.
  double spacing() const;
  /// Two cells are grid neighbours when their representatives are within
  /// this angle.
  double adjacency_radius() const { return 2.0 * spacing(); }
  /// A rotation belongs to the 1-ring of a cell when it lies within this
  /// angle of the cell representative.
  double ring_radius() const { return 2.5 * spacing(); }
  bool adjacent(CellId a, CellId b) const;

 private:
  int level_;
  std::int64_t nside_;
};

/// Throws kLevelTooLarge for k > 8, kInvalidArgument for k < 0.
So3Grid build_grid(int k);

/// Sparse per-cell hypothesis counts, sorted by cell id.
class DensityHistogram {
 public:
  DensityHistogram(So3Grid grid, std::vector<std::pair<CellId, std::uint64_t>> counts);

  const So3Grid& grid() const { return grid_; }
  const std::vector<std::pair<CellId, std::uint64_t>>& counts() const { return counts_; }
  std::uint64_t count(CellId cell) const;
  std::uint64_t total() const;
  std::uint64_t max_count() const;
  /// Histogram at level k-1 obtained by summing children.
  DensityHistogram aggregate_to_parent() const;

 private:
  So3Grid grid_;
  std::vector<std::pair<CellId, std::uint64_t>> counts_;
};

/// Builds the histogram from precomputed cell ids.
DensityHistogram histogram_from_bins(const So3Grid& grid, std::vector<CellId> bins);
DensityHistogram density(const So3Grid& grid, const std::vector<Rotation>& hypotheses,
                         int threads = 1);

/// Connected components of a set of cells under So3Grid::adjacent. Returns a
/// component label per input cell.
std::vector<int> connected_components(const So3Grid& grid, const std::vector<CellId>& cells);

}  // namespace posedist
