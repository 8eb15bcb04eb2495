"""Server configuration: TOML file, overridable by flags and environment.

Documented keys (all optional):

    host                 listen address, default 127.0.0.1
    port                 listen port, default 8080
    storage_root         directory for alerts, blobs and device records
    webhook_urls         array of notification endpoints
    classifier_threshold score at or above which an alert is confirmed
    classifier           second-stage backend spec, e.g. "constant:1.0"
    bearer_token         static token required in the Authorization header
    chip_size            side length for exported hard-negative chips
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..backends import ClassifierBackend, ConstantClassifier
from ..core import GdsError


class ConfigError(GdsError):
    """The config file is unreadable or holds unknown/invalid keys."""


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    storage_root: Path = Path("gds-data")
    webhook_urls: tuple[str, ...] = ()
    classifier_threshold: float = 0.5
    classifier: str = "constant:1.0"
    bearer_token: str | None = None
    chip_size: int = 112

    @classmethod
    def from_file(cls, path: Path | str) -> ServerConfig:
        path = Path(path)
        try:
            with path.open("rb") as handle:
                raw = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "storage_root" in raw:
            raw["storage_root"] = Path(raw["storage_root"])
        if "webhook_urls" in raw:
            raw["webhook_urls"] = tuple(raw["webhook_urls"])
        return cls(**raw)


def build_classifier(spec: str) -> ClassifierBackend:
    """Instantiate the second-stage classifier slot from its config string.

    "constant:<score>" is the only built-in; model runtimes register their
    own specs by replacing this factory in deployment code.
    """
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        try:
            return ConstantClassifier(float(arg) if arg else 1.0)
        except ValueError as exc:
            raise ConfigError(f"bad constant classifier score: {arg!r}") from exc
    raise ConfigError(f"unknown classifier spec: {spec!r}")
