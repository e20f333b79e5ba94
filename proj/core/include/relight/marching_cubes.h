// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "relight/mesh.h"
#include "relight/scalar_grid.h"

namespace relight {

// Classic marching-cubes isosurface extraction. Vertex positions come from
// linear interpolation along sign-changing cell edges; shared edge vertices
// are welded, triangles are wound so geometric normals point toward
// increasing field values (outward for a signed-distance field). Cells are
// processed slab-major (z-outer), in parallel, with output order independent
// of the worker count. An empty mesh is a legal result.
TriangleMesh marching_cubes(const ScalarGrid& grid, float iso);

// Surface enclosing {density > iso}: marching_cubes applied to
// (iso - density), so normals point toward decreasing density.
TriangleMesh extract_level_set(const ScalarGrid& density, float iso);

}  // namespace relight
