"""Run-directory writer: delimited tables, JSON summaries, figures.

Every run of the command-line driver gets one directory holding an
echo of the input config, the resolved parameters, CSV tables, a JSON
summary, and rendered figures.  All text outputs embed the artifact
version, the config hash, and the seed, and contain no timestamps, so
rerunning the same config byte-reproduces the directory.
"""

import json
from pathlib import Path

from . import __version__
from .config import config_digest

__all__ = ["RunWriter", "format_value"]


def format_value(v):
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class RunWriter:
    """Collects the outputs of one experiment run under one directory."""

    def __init__(self, out_dir, command, config_text, resolved):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config_sha = config_digest(config_text)
        self.seed = resolved["run"]["seed"]
        self.resolved = resolved
        self.files = []
        (self.dir / "config_echo.toml").write_text(config_text, encoding="utf-8")
        self.files.append("config_echo.toml")
        self.write_json("resolved_config.json", {"resolved_config": resolved})

    def _meta(self):
        return {
            "artifact": "anosovlab",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.config_sha,
            "seed": self.seed,
        }

    def _comment_lines(self):
        m = self._meta()
        return [
            f"# anosovlab {m['version']}",
            f"# command: {m['command']}",
            f"# config_sha256: {m['config_sha256']}",
            f"# seed: {m['seed']}",
        ]

    def write_csv(self, name, header, rows):
        path = self.dir / name
        lines = self._comment_lines()
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(format_value(v) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.files.append(name)
        return path

    def write_json(self, name, payload):
        path = self.dir / name
        doc = {"meta": self._meta(), **payload}
        path.write_text(
            json.dumps(doc, indent=2, sort_keys=False, default=_jsonify) + "\n",
            encoding="utf-8",
        )
        self.files.append(name)
        return path

    def savefig(self, name, fig):
        path = self.dir / name
        fig.savefig(
            path,
            dpi=140,
            metadata={"Software": f"anosovlab {__version__}"},
        )
        self.files.append(name)
        import matplotlib.pyplot as plt

        plt.close(fig)
        return path

    def write_summary(self, verdict, metrics):
        """The one-per-run summary document with verdict and key numbers."""
        return self.write_json(
            "summary.json",
            {"verdict": verdict, "metrics": metrics, "outputs": sorted(self.files)},
        )


def _jsonify(obj):
    import numpy as np

    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
