import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cardioquant.volgrid import (
    LABEL,
    SCALAR,
    SurfaceMesh,
    Volume,
    VolumeFormatError,
    crop_roi,
    extract_isosurface,
    fill_holes,
    largest_component,
    project_labels_to_surface,
    read_obj,
    read_volume,
    sample_all_msp,
    sample_msp,
    vertex_normals,
    volume_io,
    write_obj,
    write_volume,
    zscore_normalize,
)

from oracles import NEIGHBORS_26, fill_holes_oracle, flood_components


def ball(radius, pad=2):
    """Voxels whose centers lie strictly inside the sphere.

    The closed variant (<=) grows one-voxel bumps at the six poles.
    """
    n = 2 * (radius + pad) + 1
    g = np.indices((n, n, n)) - (radius + pad)
    return ((g ** 2).sum(0) < radius ** 2).astype(np.uint8)


def label_vol(data, spacing=(1.0, 1.0, 1.0)):
    return Volume(np.asarray(data, dtype=np.uint8), spacing, LABEL)


# -- volume_io ---------------------------------------------------------------

def test_roundtrip_scalar(tmp_path):
    rng = np.random.default_rng(3)
    vol = Volume(rng.normal(size=(4, 3, 5)).astype(np.float32), (0.5, 1.25, 2.0))
    write_volume(tmp_path / "img", vol)
    back = read_volume(tmp_path / "img.json")
    assert back.dims == vol.dims and back.spacing == vol.spacing and back.kind == SCALAR
    assert back.data.tobytes() == vol.data.tobytes()


@settings(max_examples=40, deadline=None)
@given(
    data=hnp.arrays(np.float32, hnp.array_shapes(min_dims=3, max_dims=3, max_side=5),
                    elements=st.floats(-1e6, 1e6, width=32)),
    spacing=st.tuples(*[st.floats(0.01, 10.0)] * 3),
)
def test_roundtrip_property(tmp_path_factory, data, spacing):
    path = tmp_path_factory.mktemp("rt") / "v"
    vol = Volume(data, spacing)
    volume_io(path, "write", vol)
    back = volume_io(path, "read")
    assert back.dims == vol.dims and back.spacing == vol.spacing
    assert np.array_equal(back.data.view(np.uint32), data.view(np.uint32))


def test_payload_size_mismatch(tmp_path):
    (tmp_path / "v.json").write_text(json.dumps(
        {"dims": [2, 2, 2], "spacing": [1, 1, 1], "kind": "scalar", "dtype": "f32", "data": "v.raw"}))
    (tmp_path / "v.raw").write_bytes(np.zeros(7, "<f4").tobytes())
    with pytest.raises(VolumeFormatError):
        read_volume(tmp_path / "v")


def test_handmade_label_file(tmp_path):
    (tmp_path / "one.json").write_text(json.dumps(
        {"dims": [1, 1, 1], "spacing": [1.0, 1.0, 1.0], "kind": "label", "dtype": "u8", "data": "one.raw"}))
    (tmp_path / "one.raw").write_bytes(bytes([3]))
    vol = read_volume(tmp_path / "one")
    assert vol.kind == LABEL and vol.data.ravel().tolist() == [3]


def test_x_fastest_payload(tmp_path):
    data = np.arange(24, dtype=np.uint8).reshape((2, 3, 4), order="F")
    write_volume(tmp_path / "o", label_vol(data))
    assert list((tmp_path / "o.raw").read_bytes()) == list(range(24))


@pytest.mark.parametrize("header", [
    {"kind": "weird", "dtype": "f32"},
    {"kind": "scalar", "dtype": "f32", "spacing": [1, 0, 1]},
    {"kind": "label", "dtype": "f32"},
])
def test_bad_headers(tmp_path, header):
    full = {"dims": [1, 1, 1], "spacing": [1, 1, 1], "data": "b.raw", **header}
    (tmp_path / "b.json").write_text(json.dumps(full))
    (tmp_path / "b.raw").write_bytes(bytes(4))
    with pytest.raises(VolumeFormatError):
        read_volume(tmp_path / "b")


def test_volume_invariants():
    with pytest.raises(ValueError):
        Volume(np.zeros((2, 2, 2)), (1, -1, 1))
    with pytest.raises(ValueError):
        Volume(np.array([[[-1]]]), kind=LABEL)


# -- zscore ------------------------------------------------------------------

def test_zscore_worked_example():
    out = zscore_normalize(Volume(np.array([1.0, 2.0, 3.0]).reshape(3, 1, 1)))
    assert np.allclose(out.data.ravel(), [-1.224745, 0.0, 1.224745], atol=1e-6)


def test_zscore_constant_raises():
    with pytest.raises(ValueError):
        zscore_normalize(Volume(np.full((3, 1, 1), 5.0)))


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, (4, 3, 2), elements=st.floats(-100, 100)))
def test_zscore_moments_and_idempotence(data):
    if data.std() < 1e-3:
        return
    once = zscore_normalize(Volume(data))
    assert abs(once.data.mean()) < 1e-9
    assert abs(once.data.std() - 1) < 1e-9
    twice = zscore_normalize(once)
    assert np.max(np.abs(twice.data - once.data)) < 1e-9


# -- crop --------------------------------------------------------------------

def test_crop_full_extent_identity():
    data = np.arange(60, dtype=np.float32).reshape(3, 4, 5)
    out = crop_roi(Volume(data), (1, 2, 2), (3, 4, 5))
    assert np.array_equal(out.data, data)


def test_crop_corner_zero_padded():
    data = np.arange(1, 65, dtype=np.float32).reshape(4, 4, 4)
    out = crop_roi(Volume(data, (2, 2, 2)), (0, 0, 0), (2, 2, 2))
    # box starts at center - size // 2 = (-1, -1, -1)
    expected = np.zeros((2, 2, 2), dtype=np.float32)
    for i, j, k in np.ndindex(2, 2, 2):
        src = (i - 1, j - 1, k - 1)
        if min(src) >= 0:
            expected[i, j, k] = data[src]
    assert np.array_equal(out.data, expected)
    assert out.spacing == (2.0, 2.0, 2.0)


def test_crop_bad_size():
    with pytest.raises(ValueError):
        crop_roi(Volume(np.zeros((2, 2, 2))), (0, 0, 0), (0, 1, 1))


# -- largest component / holes -----------------------------------------------

def test_largest_component_drops_small_blob():
    m = np.zeros((10, 3, 3), dtype=np.uint8)
    m[0:5, 1, 1] = 1
    m[7:10, 1, 1] = 1
    m[5, 0, 0] = 2
    out = largest_component(label_vol(m)).data
    assert out[0:5, 1, 1].all() and not out[7:10, 1, 1].any()
    assert out[5, 0, 0] == 2


def test_largest_component_tie_and_absent():
    m = np.zeros((7, 1, 1), dtype=np.uint8)
    m[0:2] = 1
    m[4:6] = 1
    out = largest_component(label_vol(m)).data.ravel()
    assert out.tolist() == [1, 1, 0, 0, 0, 0, 0]
    assert np.array_equal(largest_component(label_vol(m), label=5).data, m)


@pytest.mark.parametrize("conn", [6, 26])
def test_largest_component_random_against_flood(conn):
    rng = np.random.default_rng(conn)
    neighbors = None if conn == 6 else NEIGHBORS_26
    for _ in range(20):
        m = (rng.random((6, 5, 4)) < 0.35).astype(np.uint8)
        out = largest_component(label_vol(m), connectivity=conn).data
        kw = {} if neighbors is None else {"neighbors": neighbors}
        comps = flood_components(m, **kw)
        if not comps:
            assert not out.any()
            continue
        # flood scan is x-fastest, so max() over size keeps the first seed on ties
        best = max(comps, key=len)
        expected = np.zeros_like(m)
        for p in best:
            expected[p] = 1
        assert np.array_equal(out, expected)
        assert len(flood_components(out, **kw)) == 1


def test_fill_holes_shell():
    m = np.zeros((5, 5, 5), dtype=np.uint8)
    m[1:4, 1:4, 1:4] = 1
    m[2, 2, 2] = 0
    out = fill_holes(label_vol(m)).data
    assert out[1:4, 1:4, 1:4].all() and out.sum() == 27


def test_fill_holes_trivial_cases():
    solid = np.zeros((4, 4, 4), dtype=np.uint8)
    solid[1:3, 1:3, 1:3] = 1
    assert np.array_equal(fill_holes(label_vol(solid)).data, solid)
    empty = np.zeros((3, 3, 3), dtype=np.uint8)
    assert not fill_holes(label_vol(empty)).data.any()


def test_fill_holes_random_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m = (rng.random((6, 6, 5)) < 0.6).astype(np.uint8)
        out = fill_holes(label_vol(m)).data != 0
        assert np.array_equal(out, fill_holes_oracle(m))
        assert np.all(out >= (m != 0))
        again = fill_holes(label_vol(out.astype(np.uint8))).data != 0
        assert np.array_equal(again, out)


# -- isosurface / normals ----------------------------------------------------

def edge_counts(mesh):
    t = mesh.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def euler(mesh):
    return mesh.n_vertices - len(mesh.edges()) + len(mesh.triangles)


def test_isosurface_empty_raises():
    with pytest.raises(ValueError):
        extract_isosurface(label_vol(np.zeros((3, 3, 3))))


def test_isosurface_single_voxel():
    m = np.zeros((3, 3, 3), dtype=np.uint8)
    m[1, 1, 1] = 1
    mesh = extract_isosurface(label_vol(m))
    assert euler(mesh) == 2
    assert np.all(edge_counts(mesh) == 2)
    assert mesh.enclosed_volume() > 0


def test_isosurface_border_voxel_closed():
    m = np.ones((1, 1, 1), dtype=np.uint8)
    mesh = extract_isosurface(label_vol(m))
    assert euler(mesh) == 2 and np.all(edge_counts(mesh) == 2)


def test_isosurface_ball_volume_and_physical_units():
    r = 5
    mesh = extract_isosurface(label_vol(ball(r)))
    assert np.all(edge_counts(mesh) == 2)
    assert euler(mesh) == 2
    analytic = 4 / 3 * np.pi * r ** 3
    assert abs(mesh.enclosed_volume() - analytic) / analytic < 0.15
    mesh2 = extract_isosurface(label_vol(ball(r), spacing=(2.0, 2.0, 2.0)))
    assert np.isclose(mesh2.enclosed_volume(), 8 * mesh.enclosed_volume())


def test_isosurface_random_masks_watertight():
    rng = np.random.default_rng(5)
    for _ in range(30):
        m = (rng.random((5, 6, 4)) < 0.5).astype(np.uint8)
        if not m.any():
            continue
        mesh = extract_isosurface(label_vol(m))
        assert np.all(edge_counts(mesh) == 2)
        t = mesh.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        _, dcount = np.unique(directed, axis=0, return_counts=True)
        assert np.all(dcount == 1)  # consistent winding


def cube_mesh():
    v = np.array(list(np.ndindex(2, 2, 2)), dtype=float)
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return SurfaceMesh(v, tris)


def test_normals_cube_face_centers():
    # subdivided cube face: the center vertex of each face is interior to it
    m = np.zeros((5, 5, 5), dtype=np.uint8)
    m[1:4, 1:4, 1:4] = 1
    mesh = vertex_normals(extract_isosurface(label_vol(m)))
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1, atol=1e-12)
    center = mesh.vertices.mean(0)
    for axis in range(3):
        for sign in (-1, 1):
            target = center.copy()
            target[axis] += sign * 1.5
            i = np.argmin(np.linalg.norm(mesh.vertices - target, axis=1))
            expect = np.zeros(3)
            expect[axis] = sign
            assert np.allclose(mesh.normals[i], expect, atol=1e-12)


def test_normals_unit_and_outward_on_cube():
    mesh = vertex_normals(cube_mesh())
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1)
    assert np.all(np.einsum("ij,ij->i", mesh.normals, mesh.vertices - 0.5) > 0)


def test_normals_ball_radial():
    r = 5
    mask = ball(r)
    mesh = vertex_normals(extract_isosurface(label_vol(mask)))
    center = np.array([r + 2.0] * 3)
    radial = mesh.vertices - center
    radial /= np.linalg.norm(radial, axis=1)[:, None]
    angles = np.degrees(np.arccos(np.clip(np.einsum("ij,ij->i", radial, mesh.normals), -1, 1)))
    assert angles.max() < 25


def test_normals_isolated_vertex_raises():
    mesh = SurfaceMesh(np.vstack([cube_mesh().vertices, [[5, 5, 5]]]), cube_mesh().triangles)
    with pytest.raises(ValueError):
        vertex_normals(mesh)


def test_obj_roundtrip(tmp_path):
    mesh = vertex_normals(extract_isosurface(label_vol(ball(2))))
    write_obj(tmp_path / "m.obj", mesh)
    back = read_obj(tmp_path / "m.obj")
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.allclose(back.vertices, mesh.vertices, atol=1e-7)
    assert np.allclose(back.normals, mesh.normals, atol=1e-7)


# -- MSP sampling ------------------------------------------------------------

def point_mesh(vertex, normal):
    return SurfaceMesh(np.array([vertex], float), np.zeros((0, 3), int), np.array([normal], float))


def test_msp_constant_volume():
    vol = Volume(np.full((6, 6, 6), 7.5))
    prof = sample_msp(vol, point_mesh([2.5, 2.5, 2.5], [0, 0.6, 0.8]), 0, scales=[0.5, 1.0], half_width=2)
    assert np.allclose(prof.samples, 7.5)


def test_msp_linear_ramp():
    z = np.indices((8, 8, 8))[2].astype(float)
    vol = Volume(z)
    prof = sample_msp(vol, point_mesh([3.3, 4.1, 3.7], [0, 0, 1]), 0, scales=[1.0], half_width=1)
    assert np.allclose(prof.samples[0], [2.7, 3.7, 4.7], atol=1e-12)


def test_msp_affine_exact_with_spacing():
    sp = (0.5, 1.0, 2.0)
    idx = np.indices((10, 10, 10)).astype(float)
    phys = [idx[a] * sp[a] for a in range(3)]
    vol = Volume(1.5 + 2 * phys[0] - phys[1] + 0.25 * phys[2], sp)
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.uniform([1.5, 3, 6], [3, 6, 12])
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        prof = sample_msp(vol, point_mesh(v, n), 0, scales=[0.25, 0.5], half_width=2)
        for s, scale in enumerate(prof.scales):
            pts = v + np.arange(-2, 3)[:, None] * scale * n
            expect = 1.5 + 2 * pts[:, 0] - pts[:, 1] + 0.25 * pts[:, 2]
            assert np.allclose(prof.samples[s], expect, atol=1e-10)


def test_msp_shared_center_and_errors():
    rng = np.random.default_rng(1)
    vol = Volume(rng.random((6, 6, 6)))
    mesh = point_mesh([2.2, 2.9, 3.1], [1, 0, 0])
    prof = sample_msp(vol, mesh, 0, scales=[1, 2], half_width=2)
    assert prof.samples[0, 2] == prof.samples[1, 2]
    with pytest.raises(IndexError):
        sample_msp(vol, mesh, 1)
    with pytest.raises(ValueError):
        sample_msp(vol, mesh, 0, scales=[2, 1])


def test_msp_outside_reads_zero():
    vol = Volume(np.ones((3, 3, 3)))
    prof = sample_msp(vol, point_mesh([1, 1, 1], [1, 0, 0]), 0, scales=[5.0], half_width=1)
    assert prof.samples[0].tolist() == [0.0, 1.0, 0.0]


def test_sample_all_matches_single():
    mesh = vertex_normals(extract_isosurface(label_vol(ball(3))))
    vol = Volume(np.random.default_rng(2).random(ball(3).shape))
    allp = sample_all_msp(vol, mesh, scales=[0.5, 1.5], half_width=2)
    for node in (0, 7, mesh.n_vertices - 1):
        assert np.allclose(allp[node], sample_msp(vol, mesh, node, [0.5, 1.5], 2).samples)


# -- projection --------------------------------------------------------------

def test_projection_center_and_empty():
    m = np.zeros((5, 5, 5), dtype=np.uint8)
    m[2, 2, 2] = 2
    mesh = point_mesh([2.0, 2.0, 2.0], [0, 0, 1])
    assert project_labels_to_surface(label_vol(m), mesh).tolist() == [2]
    assert project_labels_to_surface(label_vol(np.zeros_like(m)), mesh).tolist() == [0]


def test_projection_along_normal_and_radius():
    m = np.zeros((5, 5, 7), dtype=np.uint8)
    m[2, 2, 4] = 2
    mesh = point_mesh([2.0, 2.0, 3.0], [0, 0, 1])
    assert project_labels_to_surface(label_vol(m), mesh, radius=3.0).tolist() == [2]
    far = point_mesh([2.0, 2.0, 0.0], [0, 0, 1])
    assert project_labels_to_surface(label_vol(m), far, radius=3.0).tolist() == [0]


def test_projection_prefers_outside_on_tie():
    m = np.zeros((5, 5, 7), dtype=np.uint8)
    m[2, 2, 2] = 1
    m[2, 2, 4] = 2
    mesh = point_mesh([2.0, 2.0, 3.0], [0, 0, 1])
    assert project_labels_to_surface(label_vol(m), mesh).tolist() == [2]
    flipped = point_mesh([2.0, 2.0, 3.0], [0, 0, -1])
    assert project_labels_to_surface(label_vol(m), flipped).tolist() == [1]
