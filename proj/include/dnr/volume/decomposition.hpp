#pragma once

#include "dnr/volume/grid_volume.hpp"

#include <vector>

namespace dnr::volume {

/// One rank's brick of the global grid.
struct Partition {
  int rank = 0;
  Index3 block{0, 0, 0};  // position in the rank grid
  IndexBox core;
  int ghost_width = 0;
  IndexBox ghost;  // core dilated by ghost_width, clamped to the domain
  /// Physical extent owned by this rank. Along split axes it reaches the first
  /// node of the next brick so that bricks tile the physical domain.
  Box3 world_bounds;
};

/// Rank grid layout over a global node grid.
struct Decomposition {
  Index3 dims{1, 1, 1};
  Index3 rank_grid{1, 1, 1};
  int ghost_width = 0;
  Mesh mesh = UniformMesh{};
  std::vector<Partition> partitions;

  int size() const { return static_cast<int>(partitions.size()); }

  int rank_of_block(const Index3& b) const { return b[0] + rank_grid[0] * (b[1] + rank_grid[1] * b[2]); }

  Box3 bounds() const {
    Box3 b;
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = mesh_coord(mesh, a, 0);
      b.hi[a] = mesh_coord(mesh, a, dims[a] - 1);
    }
    return b;
  }

  /// Rank whose world bounds contain p. Points on a shared face belong to the lower rank.
  int owner(const Vec3& p) const {
    const Box3 b = bounds();
    if (!b.contains(p)) throw DomainError("Decomposition::owner: point outside global bounds");
    Index3 blk{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
      const int per = dims[a] / rank_grid[a];
      int k = 0;
      // smallest block whose upper face is at or beyond p
      while (k < rank_grid[a] - 1 && p[a] > mesh_coord(mesh, a, (k + 1) * per)) ++k;
      blk[a] = k;
    }
    return rank_of_block(blk);
  }
};

/// Splits `dims` into rank_grid bricks in x-fastest rank order.
/// Each rank_grid component must divide the matching dims component.
inline Decomposition decompose_domain(const Index3& dims, const Index3& rank_grid, int ghost_width, Mesh mesh) {
  if (ghost_width < 0) throw ConfigError("decompose_domain: ghost width must be non-negative");
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1 || rank_grid[a] < 1) throw ConfigError("decompose_domain: dims and rank grid must be positive");
    if (dims[a] % rank_grid[a] != 0) {
      throw ConfigError("decompose_domain: dims " + to_string(dims) + " not divisible by rank grid " +
                        to_string(rank_grid));
    }
  }
  Decomposition d;
  d.dims = dims;
  d.rank_grid = rank_grid;
  d.ghost_width = ghost_width;
  d.mesh = std::move(mesh);
  const Index3 per{dims[0] / rank_grid[0], dims[1] / rank_grid[1], dims[2] / rank_grid[2]};
  for (int bz = 0; bz < rank_grid[2]; ++bz)
    for (int by = 0; by < rank_grid[1]; ++by)
      for (int bx = 0; bx < rank_grid[0]; ++bx) {
        Partition p;
        p.block = {bx, by, bz};
        p.rank = d.rank_of_block(p.block);
        p.ghost_width = ghost_width;
        for (int a = 0; a < 3; ++a) {
          p.core.lo[a] = p.block[a] * per[a];
          p.core.hi[a] = p.core.lo[a] + per[a] - 1;
          p.ghost.lo[a] = std::max(0, p.core.lo[a] - ghost_width);
          p.ghost.hi[a] = std::min(dims[a] - 1, p.core.hi[a] + ghost_width);
          const int upper = std::min(p.core.hi[a] + 1, dims[a] - 1);
          p.world_bounds.lo[a] = mesh_coord(d.mesh, a, p.core.lo[a]);
          p.world_bounds.hi[a] = mesh_coord(d.mesh, a, upper);
        }
        d.partitions.push_back(p);
      }
  return d;
}

/// Index-space variant: node i sits at physical coordinate i.
inline Decomposition decompose_domain(const Index3& dims, const Index3& rank_grid, int ghost_width) {
  return decompose_domain(dims, rank_grid, ghost_width, UniformMesh{});
}

/// Physical box spanned by a partition's ghost-extended nodes.
inline Box3 ghost_bounds(const Partition& part, const Mesh& mesh) {
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = mesh_coord(mesh, a, part.ghost.lo[a]);
    b.hi[a] = mesh_coord(mesh, a, part.ghost.hi[a]);
  }
  return b;
}

/// Affine map of the partition's core world bounds onto the unit cube, without bounds checks.
inline Vec3 to_unit(const Vec3& p, const Partition& part) {
  Vec3 u;
  for (int a = 0; a < 3; ++a) {
    const double ext = part.world_bounds.hi[a] - part.world_bounds.lo[a];
    u[a] = ext > 0.0 ? (p[a] - part.world_bounds.lo[a]) / ext : 0.0;
  }
  return u;
}

inline Vec3 denormalize_coords(const Vec3& u, const Partition& part) {
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    p[a] = part.world_bounds.lo[a] + u[a] * (part.world_bounds.hi[a] - part.world_bounds.lo[a]);
  }
  return p;
}

/// Relative coordinate of p inside the partition's core, in [0,1]^3.
inline Vec3 normalize_coords(const Vec3& p, const Partition& part) {
  if (!part.world_bounds.contains(p)) throw DomainError("normalize_coords: point outside partition bounds");
  return to_unit(p, part);
}

/// A face shared between `rank` and `neighbor`.
struct Face {
  int axis = 0;
  int side = 0;  // -1: lower face of the rank, +1: upper face
  int neighbor = 0;
  int plane_index = 0;  // global node index of the face plane along `axis`
  double plane = 0.0;   // physical coordinate of the plane
  Box3 rect;            // physical face rectangle (lo[axis] == hi[axis] == plane)
};

/// Interior faces of `part`; faces on the domain exterior are excluded.
inline std::vector<Face> shared_faces(const Partition& part, const Decomposition& d) {
  std::vector<Face> faces;
  for (int a = 0; a < 3; ++a) {
    for (int side : {-1, +1}) {
      Index3 nb = part.block;
      nb[a] += side;
      if (nb[a] < 0 || nb[a] >= d.rank_grid[a]) continue;
      Face f;
      f.axis = a;
      f.side = side;
      f.neighbor = d.rank_of_block(nb);
      f.plane_index = side < 0 ? part.core.lo[a] : part.core.hi[a] + 1;
      f.plane = mesh_coord(d.mesh, a, f.plane_index);
      f.rect = part.world_bounds;
      f.rect.lo[a] = f.rect.hi[a] = f.plane;
      faces.push_back(f);
    }
  }
  return faces;
}

/// Physical positions of the grid nodes lying on the face plane, over the core node range of
/// the other two axes.
inline std::vector<Vec3> face_lattice(const Partition& part, const Face& f, const Mesh& mesh) {
  std::vector<Vec3> pts;
  const int u = (f.axis + 1) % 3;
  const int v = (f.axis + 2) % 3;
  for (int jv = part.core.lo[v]; jv <= part.core.hi[v]; ++jv)
    for (int ju = part.core.lo[u]; ju <= part.core.hi[u]; ++ju) {
      Vec3 p;
      p[f.axis] = f.plane;
      p[u] = mesh_coord(mesh, u, ju);
      p[v] = mesh_coord(mesh, v, jv);
      pts.push_back(p);
    }
  return pts;
}

/// Coordinates on all shared faces of `part` (boundary-loss sample sites and slice metric lattice).
inline std::vector<Vec3> extract_boundary_coords(const Partition& part, const Decomposition& d) {
  std::vector<Vec3> pts;
  for (const Face& f : shared_faces(part, d)) {
    auto lat = face_lattice(part, f, d.mesh);
    pts.insert(pts.end(), lat.begin(), lat.end());
  }
  return pts;
}

}  // namespace dnr::volume
