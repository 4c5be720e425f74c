from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from clogsim.model import (ApertureState, Chemistry, FilterConfig, build_grid)


def make_config(**overrides) -> FilterConfig:
    base = dict(
        L_x=1e-3, L_y=1e-3, L_z=1e-3, n_x=4, n_y=4, n_z=4,
        p_grad=-1e4, mu=1e-3, l_particle=2.5e-5, N_particles=1e7,
        r_filter=1.19e-5, r_side=2.5e-5,
    )
    base.update(overrides)
    return FilterConfig(**base)


class TestCounts:
    def test_minimal_grid_aperture_counts(self):
        grid = build_grid(make_config(n_x=2, n_y=2, n_z=2, L_x=2e-4, L_y=2e-4, L_z=2e-4))
        # one membrane of 2x2 filtering apertures between the two layers
        assert grid.filtering_aperture_count() == 4
        # 1*2*2 x-facets plus 2*1*2 y-facets
        assert grid.side_aperture_count() == 8
        assert grid.n_membranes == 1

    def test_scenario_grid_counts(self):
        cfg = make_config(n_x=20, n_y=20, n_z=20)
        grid = build_grid(cfg)
        assert grid.filtering_aperture_count() == 20 * 20 * 19 == 7600
        assert grid.side_aperture_count() == 19 * 20 * 20 + 20 * 19 * 20

    def test_membrane_state_counts_track_mutations(self):
        grid = build_grid(make_config())
        grid.z_state[0, 0, 0] = ApertureState.PARTICLE_BLOCKED
        grid.z_state[1, 1, 2] = ApertureState.SEDIMENT_SEALED
        open_, blocked, sealed = grid.membrane_state_counts()
        assert open_.tolist() == [15, 16, 15]
        assert blocked.tolist() == [1, 0, 0]
        assert sealed.tolist() == [0, 0, 1]


class TestBuildGrid:
    def test_shapes_and_initial_state(self):
        cfg = make_config(n_x=5, n_y=4, n_z=3)
        grid = build_grid(cfg)
        assert grid.z_radius.shape == (5, 4, 2)
        assert grid.x_radius.shape == (4, 4, 3)
        assert grid.y_radius.shape == (5, 3, 3)
        assert np.all(grid.z_state == ApertureState.OPEN)
        assert np.all(grid.x_state == ApertureState.OPEN)
        assert np.all(grid.y_state == ApertureState.OPEN)
        assert np.all(grid.z_radius == cfg.filter_radii()[0])
        assert np.all(grid.x_radius == cfg.r_side)
        assert np.all(grid.z_open_count == 1)

    def test_per_membrane_radii(self):
        radii = (1e-5, 1.1e-5, 1.2e-5)
        grid = build_grid(make_config(r_filter=radii))
        for k, r in enumerate(radii):
            assert np.all(grid.z_radius[:, :, k] == r)

    def test_multiplicity_fills_open_counts(self):
        grid = build_grid(make_config(aperture_multiplicity=(2, 3, 4)))
        assert grid.z_open_count[:, :, 0].max() == 2
        assert grid.z_open_count[:, :, 2].min() == 4
        assert grid.membrane_multiplicity.tolist() == [2, 3, 4]

    def test_default_window_covers_face(self):
        grid = build_grid(make_config())
        assert grid.inlet_mask.all()
        assert grid.outlet_mask.all()

    def test_window_mask_is_one_based_inclusive(self):
        cfg = make_config(n_x=20, n_y=20, n_z=4,
                          inlet_window=((6, 14), (6, 14)),
                          outlet_window=((1, 3), (20, 20)))
        grid = build_grid(cfg)
        assert grid.inlet_mask.sum() == 9 * 9
        assert grid.inlet_mask[5, 5] and grid.inlet_mask[13, 13]
        assert not grid.inlet_mask[4, 5] and not grid.inlet_mask[14, 13]
        assert grid.outlet_mask.sum() == 3
        assert grid.outlet_mask[0, 19] and grid.outlet_mask[2, 19]

    def test_cell_sizes(self):
        cfg = make_config(L_x=2e-3, L_y=1e-3, L_z=4e-3, n_x=4, n_y=4, n_z=8,
                          r_filter=6e-5, r_side=6e-5)
        assert cfg.h_x == pytest.approx(5e-4)
        assert cfg.h_y == pytest.approx(2.5e-4)
        assert cfg.h_z == pytest.approx(5e-4)


class TestValidation:
    def test_accepts_half_cell_radius_exactly(self):
        # 1e-3/20 halves to 2.5e-5 up to binary rounding; the bound must
        # not reject the nominal half-cell radius
        cfg = make_config(n_x=20, n_y=20, n_z=20, r_side=2.5e-5)
        cfg.validate()

    @pytest.mark.parametrize("field,value,fragment", [
        ("L_x", 0.0, "L_x"),
        ("L_z", -1e-3, "L_z"),
        ("n_x", 1, "n_x"),
        ("n_z", 2.0, "n_z"),
        ("mu", 0.0, "mu"),
        ("p_grad", 0.0, "p_grad"),
        ("l_particle", -1e-6, "l_particle"),
        ("N_particles", -1.0, "N_particles"),
        ("r_filter", 0.0, "r_filter"),
        ("r_filter", 1.0, "r_filter"),
        ("r_side", 2.6e-4, "r_side"),
        ("dt", 0.0, "dt"),
        ("dt", "sometimes", "dt"),
        ("blocking_law", "other", "blocking_law"),
        ("solver_tol", 0.0, "solver_tol"),
        ("solver_max_iter", 0, "solver_max_iter"),
        ("solver_sweep", "jacobi", "solver_sweep"),
        ("time_limit", 0.0, "time_limit"),
        ("flow_stop_fraction", 1.5, "flow_stop_fraction"),
        ("seal_fraction", 0.0, "seal_fraction"),
        ("aperture_multiplicity", 0, "aperture_multiplicity"),
    ])
    def test_rejects_bad_field(self, field, value, fragment):
        cfg = make_config(**{field: value})
        with pytest.raises(ValueError, match=fragment):
            cfg.validate()

    def test_rejects_wrong_radius_count(self):
        with pytest.raises(ValueError, match="n_z - 1"):
            make_config(r_filter=(1e-5, 1e-5)).validate()

    def test_rejects_window_outside_grid(self):
        cfg = make_config(inlet_window=((0, 2), (1, 4)))
        with pytest.raises(ValueError, match="inlet_window"):
            cfg.validate()
        cfg = make_config(outlet_window=((1, 2), (2, 5)))
        with pytest.raises(ValueError, match="outlet_window"):
            cfg.validate()

    def test_rejects_chemistry_without_concentration(self, calcium):
        cfg = make_config(chemistry=calcium)
        with pytest.raises(ValueError, match="c0_entrance"):
            cfg.validate()

    @pytest.mark.parametrize("field,value", [
        ("rate_constant", 0.0),
        ("diffusivity", -1e-9),
        ("reaction_order", 0),
        ("sediment_stoichiometry", 0),
        ("sediment_density", 0.0),
        ("sediment_molar_mass", 0.0),
        ("solute_molar_mass", 0.0),
    ])
    def test_chemistry_rejects_bad_field(self, calcium, field, value):
        with pytest.raises(ValueError, match=field):
            dataclasses.replace(calcium, **{field: value})


class TestApertureAccess:
    def test_filtering_aperture_snapshot(self):
        grid = build_grid(make_config(aperture_multiplicity=3))
        grid.z_radius[1, 2, 0] = 9e-6
        grid.z_open_count[1, 2, 0] = 1
        ap = grid.aperture("z", 1, 2, 0)
        assert ap.filtering and ap.axis == "z"
        assert ap.radius == 9e-6 and ap.radius_initial == pytest.approx(1.19e-5)
        assert ap.sediment_thickness == pytest.approx(1.19e-5 - 9e-6)
        assert ap.multiplicity == 3 and ap.open_count == 1
        assert ap.is_open

    def test_side_aperture_snapshot(self):
        grid = build_grid(make_config())
        grid.x_state[0, 1, 1] = ApertureState.SEDIMENT_SEALED
        ap = grid.aperture("x", 0, 1, 1)
        assert not ap.filtering and not ap.is_open
        assert ap.state == ApertureState.SEDIMENT_SEALED
        assert ap.open_count == 0

    def test_bad_axis(self):
        grid = build_grid(make_config())
        with pytest.raises(ValueError, match="axis"):
            grid.aperture("w", 0, 0, 0)


class TestSerialization:
    def _mutated_grid(self):
        grid = build_grid(make_config(n_x=3, n_y=3, n_z=3))
        grid.z_state[0, 1, 0] = ApertureState.PARTICLE_BLOCKED
        grid.z_open_count[0, 1, 0] = 0
        grid.y_state[2, 0, 1] = ApertureState.SEDIMENT_SEALED
        grid.z_radius[1, 1, 1] *= 0.625
        grid.x_radius[0, 0, 2] = 1.2345678901234e-5
        return grid

    def test_json_round_trip_bit_exact(self):
        grid = self._mutated_grid()
        back = grid.from_json(grid.to_json())
        assert grid.equals(back)
        assert np.array_equal(grid.z_radius, back.z_radius)
        assert back.z_radius.dtype == np.float64
        assert back.z_state.dtype == np.int8
        assert back.z_open_count.dtype == np.int64

    def test_copy_is_independent(self):
        grid = self._mutated_grid()
        dup = grid.copy()
        assert grid.equals(dup)
        dup.z_state[2, 2, 1] = ApertureState.SEDIMENT_SEALED
        dup.z_radius[0, 0, 0] = 1e-6
        assert not grid.equals(dup)
        assert grid.z_state[2, 2, 1] == ApertureState.OPEN

    def test_equals_rejects_other_shape(self):
        a = build_grid(make_config(n_x=3, n_y=3, n_z=3))
        b = build_grid(make_config())
        assert not a.equals(b)
