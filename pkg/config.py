# config.py - Configuration management

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

_FALSE_VALUES = {"false", "0", "no"}


class Config:
    """
    Configuration class to manage grid defaults, tolerances and output settings
    """

    def __init__(self):
        # Octave grid (the radial variable is split into (2^{k-1}, 2^k])
        self.K_MIN = int(os.getenv("HERZHAUS_K_MIN", "-24"))
        self.K_MAX = int(os.getenv("HERZHAUS_K_MAX", "24"))
        self.NODES_PER_OCTAVE = int(os.getenv("HERZHAUS_NODES_PER_OCTAVE", "16"))
        self.QUADRATURE_RULE = os.getenv("HERZHAUS_QUADRATURE_RULE", "gauss-legendre")
        self.SPHERE_RES = int(os.getenv("HERZHAUS_SPHERE_RES", "32"))

        # Tolerances
        self.TAIL_TOLERANCE = float(os.getenv("HERZHAUS_TAIL_TOLERANCE", "1e-12"))
        self.DROP_THRESHOLD = float(os.getenv("HERZHAUS_DROP_THRESHOLD", "1e-14"))
        self.MOMENT_TOLERANCE = float(os.getenv("HERZHAUS_MOMENT_TOLERANCE", "1e-10"))
        self.SIZE_TOLERANCE = float(os.getenv("HERZHAUS_SIZE_TOLERANCE", "1e-8"))
        self.SUPPORT_TOLERANCE = float(os.getenv("HERZHAUS_SUPPORT_TOLERANCE", "1e-12"))
        self.PIECE_TOLERANCE = float(os.getenv("HERZHAUS_PIECE_TOLERANCE", "1e-6"))
        self.PARTITION_TOLERANCE = float(os.getenv("HERZHAUS_PARTITION_TOLERANCE", "1e-6"))
        self.RATIO_CAP = float(os.getenv("HERZHAUS_RATIO_CAP", "1e3"))

        # Experiment settings
        self.SEED = int(os.getenv("HERZHAUS_SEED", "0"))
        self.OUTPUT_DIR = os.getenv("HERZHAUS_OUTPUT_DIR", "reports")
        self.LOG_LEVEL = os.getenv("HERZHAUS_LOG_LEVEL", "INFO").upper()
        self.CHUNK_SIZE = int(os.getenv("HERZHAUS_CHUNK_SIZE", "256"))
        self.CONCURRENT_ATOMS = os.getenv("HERZHAUS_CONCURRENT_ATOMS", "true").lower() not in _FALSE_VALUES

        # Validate settings
        self._validate_config()

    def _validate_config(self):
        """Check that numeric settings are usable"""
        problems = []

        if self.K_MIN > self.K_MAX:
            problems.append("HERZHAUS_K_MIN must not exceed HERZHAUS_K_MAX")
        if self.NODES_PER_OCTAVE < 4:
            problems.append("HERZHAUS_NODES_PER_OCTAVE must be at least 4")
        if self.QUADRATURE_RULE not in {"gauss-legendre", "simpson"}:
            problems.append("HERZHAUS_QUADRATURE_RULE must be gauss-legendre or simpson")
        if self.QUADRATURE_RULE == "simpson" and self.NODES_PER_OCTAVE % 2:
            problems.append("HERZHAUS_NODES_PER_OCTAVE must be even for simpson")
        if self.SPHERE_RES < 1:
            problems.append("HERZHAUS_SPHERE_RES must be positive")
        if self.CHUNK_SIZE < 1:
            problems.append("HERZHAUS_CHUNK_SIZE must be positive")

        tolerances = {
            "HERZHAUS_TAIL_TOLERANCE": self.TAIL_TOLERANCE,
            "HERZHAUS_DROP_THRESHOLD": self.DROP_THRESHOLD,
            "HERZHAUS_MOMENT_TOLERANCE": self.MOMENT_TOLERANCE,
            "HERZHAUS_SIZE_TOLERANCE": self.SIZE_TOLERANCE,
            "HERZHAUS_SUPPORT_TOLERANCE": self.SUPPORT_TOLERANCE,
            "HERZHAUS_PIECE_TOLERANCE": self.PIECE_TOLERANCE,
            "HERZHAUS_PARTITION_TOLERANCE": self.PARTITION_TOLERANCE,
            "HERZHAUS_RATIO_CAP": self.RATIO_CAP,
        }
        problems.extend(f"{name} must be positive" for name, value in tolerances.items() if value <= 0)

        if problems:
            raise ValueError(
                "Invalid configuration:\n- " + "\n- ".join(problems) + "\n"
                "Please check your .env file."
            )

        # Create directories if they don't exist
        os.makedirs(self.OUTPUT_DIR, exist_ok=True)

    def grid_settings(self):
        """Grid-related settings, as recorded in report provenance"""
        return {
            "k_min": self.K_MIN,
            "k_max": self.K_MAX,
            "nodes_per_octave": self.NODES_PER_OCTAVE,
            "rule": self.QUADRATURE_RULE,
            "sphere_res": self.SPHERE_RES,
        }

    def tolerances(self):
        return {
            "tail": self.TAIL_TOLERANCE,
            "drop": self.DROP_THRESHOLD,
            "moment": self.MOMENT_TOLERANCE,
            "size": self.SIZE_TOLERANCE,
            "support": self.SUPPORT_TOLERANCE,
            "piece": self.PIECE_TOLERANCE,
            "partition": self.PARTITION_TOLERANCE,
            "ratio_cap": self.RATIO_CAP,
        }

    def __str__(self):
        """String representation for debugging"""
        return f"""
Config Status:
- Octave range: [{self.K_MIN}, {self.K_MAX}]
- Nodes per octave: {self.NODES_PER_OCTAVE} ({self.QUADRATURE_RULE})
- Sphere resolution: {self.SPHERE_RES}
- Seed: {self.SEED}
- Output directory: {self.OUTPUT_DIR}
        """
