import math

import numpy as np
import pytest

from textmaps.errors import DegenerateGeometryError, ParameterError
from textmaps.geometry import (
    MultiPolygon,
    Polygon,
    alpha_shape,
    alpha_shape_auto,
    expand_offset,
    nearest_boundary_point,
    nearest_boundary_points,
    offset_polygon,
    polygon_area,
    polygon_iou,
    polygon_perimeter,
    rasterize,
    shrink_offset,
)

from conftest import (
    mask_iou,
    mask_iou_of_polygons,
    point_in_polygon_oracle,
    random_convex_polygon,
    rasterize_oracle,
    rect_polygon,
)

SQUARE10 = rect_polygon(0, 0, 10, 10)
TRIANGLE = Polygon([(0, 0), (1, 0), (0, 1)])


class TestPolygonNormalization:
    def test_clockwise_input_flipped_to_ccw(self):
        cw = Polygon([(0, 0), (0, 10), (10, 10), (10, 0)])
        assert cw.area > 0
        np.testing.assert_allclose(cw.area, 100.0)

    def test_duplicate_vertices_stripped(self):
        p = Polygon([(0, 0), (0, 0), (10, 0), (10, 10), (10, 10), (0, 10)])
        assert len(p) == 4

    def test_collinear_vertex_stripped(self):
        p = Polygon([(0, 0), (5, 0), (10, 0), (10, 10), (0, 10)])
        assert len(p) == 4

    def test_closing_vertex_dropped(self):
        p = Polygon([(0, 0), (10, 0), (10, 10), (0, 10), (0, 0)])
        assert len(p) == 4

    def test_collinear_points_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            Polygon([(0, 0), (5, 5), (10, 10)])

    def test_too_few_vertices_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            Polygon([(0, 0), (1, 1)])

    def test_nan_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            Polygon([(0, 0), (1, float("nan")), (0, 1)])

    def test_vertices_read_only(self):
        with pytest.raises(ValueError):
            SQUARE10.vertices[0, 0] = 99.0


class TestAreaPerimeter:
    def test_square_area(self):
        assert polygon_area(SQUARE10) == pytest.approx(100.0, abs=1e-12)

    def test_triangle_area(self):
        assert polygon_area(TRIANGLE) == pytest.approx(0.5, abs=1e-12)

    def test_14gon_approximates_circle(self):
        # Regular 14-gon circumscribing a radius-r circle (apothem r):
        # analytic area n r^2 tan(pi / n), within 2% of the circle's.
        n, r = 14, 37.0
        vertex_radius = r / math.cos(math.pi / n)
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        poly = Polygon(
            np.stack([vertex_radius * np.cos(angles), vertex_radius * np.sin(angles)], axis=1)
        )
        analytic = n * r * r * math.tan(math.pi / n)
        assert polygon_area(poly) == pytest.approx(analytic, rel=1e-12)
        assert abs(polygon_area(poly) - math.pi * r * r) / (math.pi * r * r) < 0.02

    def test_square_perimeter(self):
        assert polygon_perimeter(SQUARE10) == pytest.approx(40.0, abs=1e-12)

    def test_triangle_perimeter(self):
        assert polygon_perimeter(TRIANGLE) == pytest.approx(2.0 + math.sqrt(2.0), rel=1e-12)


class TestShrinkOffset:
    def test_square_alpha_06(self):
        assert shrink_offset(SQUARE10, 0.6) == pytest.approx(1.6, abs=1e-12)

    def test_alpha_one_is_zero(self):
        assert shrink_offset(SQUARE10, 1.0) == 0.0
        assert shrink_offset(TRIANGLE, 1.0) == 0.0

    def test_rectangle_100x20(self):
        rect = rect_polygon(0, 0, 100, 20)
        assert shrink_offset(rect, 0.6) == pytest.approx(2000.0 * 0.64 / 240.0, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ParameterError):
            shrink_offset(SQUARE10, alpha)

    def test_scale_covariance(self, rng):
        # Homogeneous of degree 1: scaling the polygon scales the offset.
        for _ in range(200):
            poly = random_convex_polygon(rng)
            scale = float(rng.uniform(0.1, 25.0))
            alpha = float(rng.uniform(0.05, 1.0))
            d = shrink_offset(poly, alpha)
            d_scaled = shrink_offset(poly.scaled(scale), alpha)
            assert d_scaled == pytest.approx(scale * d, rel=1e-9)

    def test_expand_offset_square(self):
        assert expand_offset(SQUARE10, 1.2) == pytest.approx(100.0 * 0.44 / 40.0, rel=1e-12)

    def test_expand_offset_rejects_beta_below_one(self):
        with pytest.raises(ParameterError):
            expand_offset(SQUARE10, 0.9)


class TestOffsetPolygon:
    def test_square_inward_exact(self):
        result = offset_polygon(SQUARE10, -1.6)
        assert len(result) == 1
        assert polygon_iou(result.parts[0], rect_polygon(1.6, 1.6, 8.4, 8.4)) > 0.9999

    def test_inward_past_inradius_empty(self):
        assert offset_polygon(SQUARE10, -6.0).is_empty

    def test_zero_delta_identity(self):
        result = offset_polygon(SQUARE10, 0.0)
        assert len(result) == 1
        assert result.parts[0] is SQUARE10

    def test_outward_contains_input(self, rng):
        for _ in range(20):
            poly = random_convex_polygon(rng)
            grown = offset_polygon(poly, +3.0)
            assert len(grown) == 1
            inner = rasterize(poly, 140, 140)
            outer = rasterize(grown, 140, 140)
            assert (inner & ~outer).sum() == 0
            assert outer.sum() > inner.sum()

    def test_inward_inside_input(self, rng):
        for _ in range(20):
            poly = random_convex_polygon(rng)
            shrunk = offset_polygon(poly, -2.0)
            inner = rasterize(shrunk, 140, 140)
            outer = rasterize(poly, 140, 140)
            assert (inner & ~outer).sum() == 0

    def test_shrink_grow_roundtrip_stable(self, rng):
        # Shrink-then-grow is an opening: round joins shave about pi*d^2 of
        # corner area, so the 0.98 bound holds for d small next to sqrt(area).
        fixtures = [SQUARE10.scaled(4.0).translated(30, 30), rect_polygon(20, 40, 110, 80)]
        for _ in range(8):
            fixtures.append(random_convex_polygon(rng))
        for poly in fixtures:
            mask = rasterize(poly, 160, 160)
            from scipy.ndimage import distance_transform_edt

            inradius = distance_transform_edt(mask).max()
            d = min(0.5 * inradius, 0.05 * math.sqrt(poly.area))
            back = MultiPolygon(
                tuple(
                    part
                    for piece in offset_polygon(poly, -d)
                    for part in offset_polygon(piece, +d)
                )
            )
            assert mask_iou(rasterize(back, 160, 160), mask) >= 0.98

    def test_concave_split_keeps_all_parts(self):
        # A dumbbell shrinks into two separate lobes.
        dumbbell = Polygon(
            [
                (0, 0), (30, 0), (30, 12), (36, 12), (36, 0), (66, 0),
                (66, 30), (36, 30), (36, 18), (30, 18), (30, 30), (0, 30),
            ]
        )
        result = offset_polygon(dumbbell, -4.0)
        assert len(result) == 2


class TestRasterize:
    def test_square_exact_pixels(self):
        mask = rasterize(rect_polygon(1, 1, 4, 4), 6, 6)
        expected = np.zeros((6, 6), dtype=bool)
        expected[1:4, 1:4] = True
        np.testing.assert_array_equal(mask, expected)
        assert mask.sum() == 9

    def test_empty_multipolygon(self):
        assert rasterize(MultiPolygon(), 8, 8).sum() == 0

    def test_covering_polygon_all_set(self):
        mask = rasterize(rect_polygon(-5, -5, 20, 20), 8, 8)
        assert mask.all()

    def test_dimension_validation(self):
        with pytest.raises(ParameterError):
            rasterize(SQUARE10, 0, 4)

    @pytest.mark.parametrize(
        "poly,size",
        [
            (rect_polygon(3.2, 7.9, 90.5, 60.1), 128),
            (Polygon([(10, 64), (64, 6), (120, 64), (64, 122)]), 128),
            (Polygon([(5, 5), (60, 15), (50, 50), (12, 40)]), 64),
        ],
    )
    def test_matches_bruteforce_point_in_polygon(self, poly, size):
        np.testing.assert_array_equal(
            rasterize(poly, size, size), rasterize_oracle(poly, size, size)
        )

    def test_matches_bruteforce_on_banana(self):
        from textmaps.synth import synth_images

        img = synth_images("banana", 1, seed=3)[0]
        poly = img.annotations[0].polygon
        np.testing.assert_array_equal(
            rasterize(poly, 128, 128), rasterize_oracle(poly, 128, 128)
        )


class TestNearestBoundary:
    def test_perpendicular_to_edge(self):
        point, dist = nearest_boundary_point(SQUARE10, (5.0, -3.0))
        assert point == pytest.approx((5.0, 0.0))
        assert dist == pytest.approx(3.0)

    def test_on_vertex(self):
        point, dist = nearest_boundary_point(SQUARE10, (10.0, 10.0))
        assert point == pytest.approx((10.0, 10.0))
        assert dist == 0.0

    def test_outside_corner(self):
        point, dist = nearest_boundary_point(SQUARE10, (12.0, 12.0))
        assert point == pytest.approx((10.0, 10.0))
        assert dist == pytest.approx(math.sqrt(8.0))

    def test_against_dense_sampling_oracle(self, rng):
        for _ in range(10):
            poly = random_convex_polygon(rng)
            perimeter = poly.perimeter
            # 1e4 boundary samples: walk every edge at uniform arc length.
            samples = []
            verts = poly.vertices
            for k in range(len(verts)):
                a, b = verts[k], verts[(k + 1) % len(verts)]
                n = max(2, int(1e4 * np.hypot(*(b - a)) / perimeter))
                t = np.linspace(0.0, 1.0, n)
                samples.append(a + t[:, None] * (b - a))
            samples = np.concatenate(samples)
            queries = rng.uniform(-10.0, 140.0, size=(50, 2))
            _, dists = nearest_boundary_points(poly, queries)
            for q, d in zip(queries, dists):
                sampled = np.hypot(*(samples - q).T).min()
                assert d <= sampled + 1e-3 * perimeter


class TestPolygonIou:
    def test_identical(self):
        assert polygon_iou(SQUARE10, SQUARE10) == pytest.approx(1.0)

    def test_disjoint(self):
        assert polygon_iou(SQUARE10, rect_polygon(20, 20, 30, 30)) == 0.0

    def test_half_overlap_unit_squares(self):
        a = rect_polygon(0, 0, 1, 1)
        b = rect_polygon(0.5, 0, 1.5, 1)
        assert polygon_iou(a, b) == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert mask_iou_of_polygons(a, b, scale=256) == pytest.approx(1.0 / 3.0, abs=0.01)

    def test_symmetry(self, rng):
        for _ in range(50):
            a = random_convex_polygon(rng)
            b = random_convex_polygon(rng)
            assert polygon_iou(a, b) == pytest.approx(polygon_iou(b, a), rel=1e-12, abs=1e-12)

    def test_matches_mask_iou(self, rng):
        for _ in range(25):
            a = random_convex_polygon(rng)
            b = random_convex_polygon(rng)
            assert polygon_iou(a, b) == pytest.approx(mask_iou_of_polygons(a, b), abs=0.01)


class TestAlphaShape:
    def test_square_corners_large_radius(self):
        corners = [(0, 0), (10, 0), (10, 10), (0, 10)]
        result = alpha_shape(corners, radius=100.0)
        assert len(result) == 1
        assert polygon_iou(result.parts[0], SQUARE10) > 0.9999

    def test_three_points_triangle(self):
        result = alpha_shape([(0, 0), (4, 0), (0, 3)], radius=50.0)
        assert polygon_iou(result.parts[0], Polygon([(0, 0), (4, 0), (0, 3)])) > 0.9999

    def test_l_shape_dense_samples(self):
        # Grid samples of an L region, spacing 2 px, boundary included.
        xs = np.arange(0, 61, 2.0)
        pts = [(x, y) for x in xs for y in xs if x <= 30 or y <= 30]
        result = alpha_shape(pts, radius=4.0)
        l_poly = Polygon([(0, 0), (60, 0), (60, 30), (30, 30), (30, 60), (0, 60)])
        got = rasterize(result, 64, 64)
        want = rasterize(l_poly, 64, 64)
        assert mask_iou(got, want) >= 0.95

    def test_small_radius_falls_back_to_convex_hull(self):
        corners = [(0, 0), (10, 0), (10, 10), (0, 10)]
        result = alpha_shape(corners, radius=0.01)
        assert polygon_iou(result.parts[0], SQUARE10) > 0.9999

    def test_too_few_points(self):
        with pytest.raises(DegenerateGeometryError):
            alpha_shape([(0, 0), (1, 1)], radius=1.0)

    def test_collinear_points(self):
        with pytest.raises(DegenerateGeometryError):
            alpha_shape([(0, 0), (1, 1), (2, 2), (3, 3)], radius=1.0)

    def test_radius_validation(self):
        with pytest.raises(ParameterError):
            alpha_shape([(0, 0), (1, 0), (0, 1)], radius=0.0)

    def test_keeps_component_with_most_points(self):
        rng = np.random.default_rng(5)
        big = rng.uniform(0, 20, size=(120, 2))
        small = rng.uniform(60, 64, size=(10, 2))
        result = alpha_shape(np.concatenate([big, small]), radius=4.0)
        assert len(result) == 1
        assert result.parts[0].vertices[:, 0].max() < 30.0

    def test_auto_reconstructs_boundary_only_samples(self):
        # Points exactly on a rectangle outline: escalation must fill it in.
        t = np.linspace(0.0, 1.0, 60)
        edges = [
            np.stack([t * 40, np.zeros_like(t)], axis=1),
            np.stack([np.full_like(t, 40.0), t * 18], axis=1),
            np.stack([40 - t * 40, np.full_like(t, 18.0)], axis=1),
            np.stack([np.zeros_like(t), 18 - t * 18], axis=1),
        ]
        poly = alpha_shape_auto(np.concatenate(edges), radius_scale=2.0)
        assert poly is not None
        assert polygon_iou(poly, rect_polygon(0, 0, 40, 18)) > 0.99

    def test_auto_returns_none_for_degenerate(self):
        assert alpha_shape_auto(np.array([(0.0, 0.0), (1.0, 1.0)])) is None
        assert alpha_shape_auto(np.array([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])) is None
