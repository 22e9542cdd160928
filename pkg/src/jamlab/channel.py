"""Propagation models: rural aerial path loss, cellular-to-UAV air-to-ground
path loss with elevation-dependent shadowing, and SINR under co-channel
interference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AirGroundParams:
    """Elevation-dependent air-to-ground path loss parameters.

    The excess-loss curve is C*(theta-theta0)*exp(-(theta-theta0)/D) + eta0
    with theta the elevation angle in degrees; shadowing is zero-mean Gaussian
    with standard deviation a*theta + sigma0_uav. sigma0_terrestrial is the
    terrestrial shadowing constant, kept in the config for completeness.
    """

    alpha: float = 3.04
    c_excess: float = -23.29
    d_decay: float = 4.14
    theta0_deg: float = -3.61
    eta0_db: float = 20.70
    a_shadow: float = -0.41
    sigma0_uav: float = 5.86
    sigma0_terrestrial: float = 8.52


@dataclass
class ChannelConfig:
    snr_db: float = 15.0
    jsr_db: float = 6.0
    carrier_freq_ghz: float = 2.0
    building_height_m: float = 5.0
    pathloss_model: str = "NONE"  # NONE | RMA_AV | CTU_AD
    air_ground: AirGroundParams = field(default_factory=AirGroundParams)

    def noise_power(self) -> float:
        """Noise power for unit-power signal at the configured SNR."""
        return 10.0 ** (-self.snr_db / 10.0)

    def jammer_amplitude(self) -> float:
        """Jammer amplitude for a unit-amplitude signal at the configured JSR."""
        return 10.0 ** (self.jsr_db / 20.0)


def path_loss_rural_aerial(pos_tx: np.ndarray, pos_rx: np.ndarray,
                           cfg: ChannelConfig) -> float:
    """Rural aerial macro path loss in dB between two 3-D positions.

    Uses carrier frequency in GHz and the average building height kappa;
    valid only for strictly positive link distance.
    """
    d = float(np.linalg.norm(np.asarray(pos_tx, float) - np.asarray(pos_rx, float)))
    if d <= 0.0:
        raise ValueError("link distance must be > 0")
    kappa = cfg.building_height_m
    if kappa <= 0.0:
        raise ValueError("building height must be > 0")
    fc = cfg.carrier_freq_ghz
    return (20.0 * np.log10(40.0 * np.pi * d * fc / 3.0)
            + min(0.03 * kappa, 10.0) * np.log10(d)
            + min(0.044 * kappa, 14.77)
            + 0.002 * np.log10(kappa) * d)


def path_loss_air_ground(ground_pos: np.ndarray, air_pos: np.ndarray,
                         cfg: ChannelConfig, rng: np.random.Generator | None = None,
                         shadowing: bool = True) -> float:
    """Air-to-ground path loss in dB with elevation-dependent shadowing.

    The deterministic part is 10*alpha*log10(d2d) plus the excess-loss curve;
    shadowing adds one Gaussian draw with elevation-dependent sigma.
    """
    g = np.asarray(ground_pos, float)
    a = np.asarray(air_pos, float)
    d2d = float(np.linalg.norm(a[:2] - g[:2]))
    if d2d <= 0.0:
        raise ValueError("horizontal distance must be > 0")
    p = cfg.air_ground
    theta = float(np.degrees(np.arctan2(a[2] - g[2], d2d)))
    dt = theta - p.theta0_deg
    excess = p.c_excess * dt * np.exp(-dt / p.d_decay) + p.eta0_db
    pl = 10.0 * p.alpha * np.log10(d2d) + excess
    if shadowing:
        if rng is None:
            raise ValueError("rng required when shadowing is enabled")
        sigma = max(p.a_shadow * theta + p.sigma0_uav, 0.0)
        pl += float(rng.normal(0.0, sigma))
    return float(pl)


def linear_gain(path_loss_db: float) -> float:
    """Linear power gain h = 1 / PL_linear."""
    return float(10.0 ** (-path_loss_db / 10.0))


def sinr(p_tx: float, gain_tx: float, p_jam: float, gain_jam: float,
         same_channel: bool, noise_power: float) -> float:
    """Linear SINR; the jammer term only counts on a shared channel."""
    if noise_power <= 0.0:
        raise ValueError("noise power must be > 0")
    interference = p_jam * gain_jam if same_channel else 0.0
    return float(p_tx * gain_tx / (interference + noise_power))
