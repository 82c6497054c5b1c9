"""Tests for configuration parsing, validation, and serialization."""

import dataclasses

import pytest

import plastlim as pl
from plastlim.errors import ParseError, ValidationError


class TestDefaults:
    def test_default_config_is_validated(self):
        config = pl.default_config()
        assert config.material.sigma_y == 0.19870693671975337
        assert config.body_force == (0.0, -0.08)
        assert config.eps_ladder == (0.2, 0.1, 0.05, 0.025)
        assert config.alpha0 == 1e-6
        assert (config.nx, config.ny) == (16, 8)
        assert config.steps == 20
        assert config.defaulted == ()

    def test_empty_text_falls_back_everywhere(self):
        config = pl.parse_config_text("")
        assert config == pl.default_config()
        assert "material.sigma_y" in config.defaulted
        assert "run.output_dir" in config.defaulted

    def test_defaulted_lists_only_missing_keys(self):
        config = pl.parse_config_text("[mesh]\nnx = 4\nny = 2\n")
        assert "mesh.nx" not in config.defaulted
        assert "mesh.ny" not in config.defaulted
        assert "mesh.lx" in config.defaulted


class TestRoundTrip:
    def test_serialize_then_parse_is_identity(self):
        config = pl.default_config()
        again = pl.parse_config_text(pl.serialize_config(config))
        assert again == config
        assert again.defaulted == ()  # every key was explicit

    def test_round_trip_preserves_modifications(self):
        config = dataclasses.replace(
            pl.default_config(),
            nx=5,
            eps_ladder=(0.3, 0.15, 0.075),
            breakpoints=((0.0, 0.0), (0.25, -1.0), (1.0, 0.5)),
            output_dir="elsewhere",
        )
        again = pl.parse_config_text(pl.serialize_config(config))
        assert again == config

    def test_reference_text_parses_to_defaults(self):
        config = pl.parse_config_text(pl.reference_text())
        assert config == pl.default_config()

    def test_parse_config_reads_files(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(pl.serialize_config(pl.default_config()), encoding="utf-8")
        assert pl.parse_config(str(path)) == pl.default_config()


class TestParseErrors:
    def test_unknown_key(self):
        with pytest.raises(ParseError, match="unknown key"):
            pl.parse_config_text("[mesh]\nnz = 3\n")

    def test_unknown_section(self):
        with pytest.raises(ParseError, match="unknown section"):
            pl.parse_config_text("[grid]\nnx = 3\n")

    def test_unparseable_value(self):
        with pytest.raises(ParseError, match=r"\[mesh\] nx"):
            pl.parse_config_text("[mesh]\nnx = many\n")

    def test_malformed_ini(self):
        with pytest.raises(ParseError):
            pl.parse_config_text("nx = 3\n")  # key before any section


class TestValidationErrors:
    def test_eps_out_of_range_names_the_key(self):
        with pytest.raises(ValidationError, match="eps_ladder"):
            pl.parse_config_text("[sweep]\neps_ladder = 1.5, 0.1\n")

    def test_nonmonotone_ladder(self):
        with pytest.raises(ValidationError, match="strictly decrease"):
            pl.parse_config_text("[sweep]\neps_ladder = 0.1, 0.2\n")

    def test_profile_must_start_at_zero(self):
        with pytest.raises(ValidationError, match="profile"):
            pl.parse_config_text("[load]\nprofile = 0:0.5, 1:1\n")

    def test_bad_material_reported(self):
        with pytest.raises(ValidationError, match="material"):
            pl.parse_config_text("[material]\nmu = -1\n")

    def test_all_problems_reported_at_once(self):
        text = "[mesh]\nnx = 0\n[time]\nsteps = 0\n"
        with pytest.raises(ValidationError) as err:
            pl.parse_config_text(text)
        assert "nx" in str(err.value)
        assert "steps" in str(err.value)


class TestHelpers:
    def test_with_sigma_y(self):
        config = pl.default_config().with_sigma_y(0.42)
        assert config.material.sigma_y == 0.42
        assert config.material.mu == 1.0

    def test_make_mesh_and_grid_agree_with_fields(self):
        config = pl.parse_config_text("[mesh]\nnx = 4\nny = 2\n[time]\nsteps = 5\n")
        mesh = config.make_mesh()
        assert mesh.triangles.shape[0] == 2 * 4 * 2
        grid = config.make_grid(alpha=0.125)
        assert grid.instants.size == 6
        assert grid.alpha == 0.125
