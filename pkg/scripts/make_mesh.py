#!/usr/bin/env python3
"""Generate a subdivided icosphere as an OFF file.

Used once to produce the small bundled mesh the interpolation tests run
against; rerun with a different subdivision level for bigger meshes.

    python scripts/make_mesh.py --subdivisions 3 --out tests/data/sphere_642.off
"""

import argparse

import numpy as np


def icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return verts, faces


def subdivide(verts, faces):
    verts = list(map(tuple, verts))
    midpoint = {}

    def mid(a, b):
        key = (min(a, b), max(a, b))
        if key not in midpoint:
            p = (np.asarray(verts[a]) + np.asarray(verts[b])) / 2.0
            p /= np.linalg.norm(p)
            midpoint[key] = len(verts)
            verts.append(tuple(p))
        return midpoint[key]

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.asarray(verts), new_faces


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subdivisions", type=int, default=3)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    verts, faces = icosahedron()
    for _ in range(args.subdivisions):
        verts, faces = subdivide(verts, faces)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(verts)} {len(faces)} 0\n")
        for v in verts:
            fh.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    print(f"wrote {args.out}: {len(verts)} vertices, {len(faces)} faces")


if __name__ == "__main__":
    main()
