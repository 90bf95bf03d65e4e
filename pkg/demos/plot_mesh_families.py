"""
The three mesh families
=======================

Randomised quadrilaterals, remapped hexagonal duals and non-convex
octagons, at increasing refinement.
"""

# every family is a pure function of (family, level, seed)
from polyvem import audit_quality, mesh_family

for family in ("m1", "m2", "m3"):
    for level in (1, 2, 3):
        mesh = mesh_family(family, level)
        rep = audit_quality(mesh)
        print(f"{family} level {level}: {mesh.n_elements:5d} elements, "
              f"{mesh.n_edges:5d} edges, {mesh.n_vertices:5d} vertices, "
              f"h = {mesh.h:.3f}, min edge/diameter = {rep.min_edge_ratio:.3f}, "
              f"star-shaped: {rep.all_star_shaped}")

# one element of each kind; the octagon has re-entrant corners
for family in ("m1", "m2", "m3"):
    mesh = mesh_family(family, 1)
    e = mesh.n_elements // 2
    print(family, mesh.element_coords(e).round(3).tolist())

# meshes round-trip through a plain text format
from polyvem import read_mesh, write_mesh

write_mesh(mesh_family("m3", 1), "m3_level1.txt")
print(read_mesh("m3_level1.txt"))
