"""Tests for AdapterConfig validation."""

import dataclasses

import pytest

from resdec_adapter import AdapterConfig
from resdec_adapter.errors import ConfigError


class TestAdapterConfig:
    def test_defaults(self):
        cfg = AdapterConfig(model="/some/checkpoint")
        assert cfg.top_m == 64
        assert cfg.device == "cpu"
        assert cfg.max_context == 0

    def test_frozen(self):
        cfg = AdapterConfig(model="/some/checkpoint")
        with pytest.raises(dataclasses.FrozenInstanceError):
            cfg.top_m = 8

    def test_empty_model_rejected(self):
        with pytest.raises(ConfigError):
            AdapterConfig(model="")

    @pytest.mark.parametrize("top_m", [0, -1, -64])
    def test_nonpositive_top_m_rejected(self, top_m):
        with pytest.raises(ConfigError):
            AdapterConfig(model="/some/checkpoint", top_m=top_m)

    def test_empty_device_rejected(self):
        with pytest.raises(ConfigError):
            AdapterConfig(model="/some/checkpoint", device="")

    def test_negative_max_context_rejected(self):
        with pytest.raises(ConfigError):
            AdapterConfig(model="/some/checkpoint", max_context=-1)
