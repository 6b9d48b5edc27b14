#pragma once

#include "defgrasp/mesh.hpp"

namespace defgrasp::gen {

// Structured tetrahedral meshes for primitives. Every hexahedral cell is split
// into 6 tets sharing the cell diagonal, so neighbouring cells match conformally.

/// Unit cube [0,1]^3 split into 5 tets.
TetMesh unit_cube_5tet(double density);

/// Box [0,lx]x[0,ly]x[0,lz] translated by `origin`, nx*ny*nz cells.
TetMesh box(const Vec3& size, int nx, int ny, int nz, double density,
            const Vec3& origin = Vec3::Zero());

/// Ellipsoid with semi-axes `radii` centered at `center`, n cells per axis of the
/// mapped cube.
TetMesh ellipsoid(const Vec3& radii, int n, double density, const Vec3& center = Vec3::Zero());

/// Solid cylinder along +x from `origin`, n_cross cells across the section and
/// n_len cells along the axis.
TetMesh cylinder(double radius, double length, int n_cross, int n_len, double density,
                 const Vec3& origin = Vec3::Zero());

/// Truncated cone along +z from `origin`: base radius r0 at z=0, tip radius r1 at z=height.
TetMesh cone(double r0, double r1, double height, int n_cross, int n_len, double density,
             const Vec3& origin = Vec3::Zero());

}  // namespace defgrasp::gen
