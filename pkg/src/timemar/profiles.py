"""Bundled dataset profiles mirroring the published configuration tables."""

from __future__ import annotations

import copy

# Shared schedule defaults; the energy profile overrides its stage-2 lr.
_STAGE1 = {"epochs": 5000, "base_lr": 1e-4, "decay_epoch": 500, "decay_rate": 0.5, "batch_size": 128, "seed": 0}
_STAGE2 = {"epochs": 900, "base_lr": 1e-4, "decay_epoch": 90, "decay_rate": 0.5, "batch_size": 512, "seed": 0}

_LARGE_AR = {"embed_dim": 1024, "layers": 1, "heads": 16, "fc_rate": 4, "dropout": 0.1}


def _profile(data: dict, vqvae: dict, ar: dict | None = None, overrides: dict | None = None) -> dict:
    profile = {
        "data": data,
        "vqvae": vqvae,
        "ar": dict(ar or _LARGE_AR),
        "schedule_stage1": dict(_STAGE1),
        "schedule_stage2": dict(_STAGE2),
    }
    for path, value in (overrides or {}).items():
        section, key = path.split(".")
        profile[section][key] = value
    return copy.deepcopy(profile)


_STANDARD_VQ = {
    "vocab_size": 512,
    "z_channels": 256,
    "ch": 256,
    "ch_mult": [1, 1, 2],
    "enc_dec_layers": 3,
    "patch_nums": [1, 2, 3, 4, 5, 6],
}

PROFILES: dict[str, dict] = {
    "sines": _profile(
        {"source": "sines", "n": 10000, "T": 24, "D": 5, "seed": 0},
        dict(_STANDARD_VQ),
    ),
    "stocks": _profile(
        {"source": "csv", "T": 24, "D": 6, "stride": 1},
        dict(_STANDARD_VQ, vocab_size=384),
    ),
    "etth": _profile(
        {"source": "csv", "T": 24, "D": 7, "stride": 1},
        dict(_STANDARD_VQ, ch_mult=[2, 2, 2]),
    ),
    "mujoco": _profile(
        {"source": "csv", "T": 24, "D": 14, "stride": 1},
        dict(_STANDARD_VQ),
    ),
    "energy": _profile(
        {"source": "csv", "T": 24, "D": 28, "stride": 1},
        dict(_STANDARD_VQ),
        overrides={"schedule_stage2.base_lr": 5e-5},
    ),
    "fmri": _profile(
        {"source": "csv", "T": 24, "D": 50, "stride": 1},
        dict(_STANDARD_VQ, vocab_size=1024, ch_mult=[1, 2], patch_nums=[1, 2, 3, 4, 6, 8, 10, 12]),
    ),
    # Desk-scale profile: small enough to train end to end on a CPU in minutes.
    "desk": _profile(
        {"source": "sines", "n": 2000, "T": 24, "D": 5, "seed": 1},
        {
            "vocab_size": 128,
            "z_channels": 64,
            "ch": 64,
            "ch_mult": [1, 1, 2],
            "enc_dec_layers": 2,
            "patch_nums": [1, 2, 3, 4, 5, 6],
        },
        ar={"embed_dim": 256, "layers": 2, "heads": 4, "fc_rate": 4, "dropout": 0.1},
        overrides={
            "schedule_stage1.epochs": 200,
            "schedule_stage1.base_lr": 2e-3,
            "schedule_stage1.decay_epoch": 80,
            "schedule_stage1.seed": 1,
            "schedule_stage2.epochs": 200,
            "schedule_stage2.base_lr": 1e-3,
            "schedule_stage2.decay_epoch": 80,
            "schedule_stage2.batch_size": 256,
            "schedule_stage2.seed": 1,
        },
    ),
}

# Parameter-sensitivity grid: every cell must pass config validation.
SENSITIVITY_GRID = [
    {"vocab_size": vocab, "patch_nums": patches}
    for vocab in (256, 384, 512)
    for patches in ([1, 2, 3, 6], [1, 2, 3, 4, 5, 6])
]


def profile_names() -> list[str]:
    return sorted(PROFILES)


def get_profile(name: str) -> dict:
    if name not in PROFILES:
        raise KeyError(f"unknown profile {name!r}; available: {', '.join(profile_names())}")
    return copy.deepcopy(PROFILES[name])
