"""Tests for option validation."""

import pytest

from koopid.config import IdentificationConfig
from koopid.error import ConfigurationError


class TestIdentificationConfig:
    def test_defaults(self):
        config = IdentificationConfig.from_options({})
        assert (config.m1, config.m_f, config.m2) == (1, 3, 3)
        assert config.rcond is None
        assert not config.estimate_diffusion
        assert not config.rescale

    def test_coercion(self):
        config = IdentificationConfig.from_options({"m1": "2", "m_f": 2, "rcond": "1e-10"})
        assert config.m1 == 2
        assert config.m2 == 3
        assert config.rcond == pytest.approx(1e-10)

    @pytest.mark.parametrize(
        "options",
        [{"m1": 0}, {"m_f": -1}, {"rcond": -1.0}, {"m1": "two"}, {"unknown": 1}],
    )
    def test_invalid_options(self, options):
        with pytest.raises(ConfigurationError):
            IdentificationConfig.from_options(options)

    def test_direct_construction_is_checked(self):
        with pytest.raises(ConfigurationError):
            IdentificationConfig(m1=0)

    def test_update_from_options(self):
        config = IdentificationConfig()
        config.update_from_options({"m1": 2, "estimate_diffusion": True})
        assert config.m1 == 2
        assert config.estimate_diffusion
        assert config.to_dict()["m2"] == 4

    def test_update_rejects_unknown_key(self):
        config = IdentificationConfig()
        with pytest.raises(ConfigurationError, match="Unknown option key"):
            config.update_from_options({"horizon": 3})

    def test_update_rejects_invalid_value(self):
        config = IdentificationConfig()
        with pytest.raises(ConfigurationError):
            config.update_from_options({"m_f": 0})
