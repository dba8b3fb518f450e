"""Pipeline configuration.

Values resolve in the order: CLI flag > TOML config file > environment
(``OCOD_`` prefix, ``__`` between nested keys) > defaults.
"""
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ocod_enhance.core.enums import AreaLevel, ClassLabels, Resolver, WeightMode
from ocod_enhance.core.errors import ConfigurationError, InputFileError


DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_RULES = DATA_DIR / "default_rules.yaml"
DEFAULT_CLASSIFICATION_STEPS = DATA_DIR / "classification_steps.yaml"


class PathSettings(BaseModel):
    """Input and output locations."""
    register: Optional[Path] = None
    onspd: Optional[Path] = None
    pricepaid: Optional[Path] = None
    voa: Optional[Path] = None
    span_truth: Optional[Path] = None
    class_truth: Optional[Path] = None
    adjacency: Optional[Path] = None
    homes: Optional[Path] = None
    # Per-type count series keyed by type name, e.g. {"airbnb": ...}.
    series: dict[str, Path] = Field(default_factory=dict)
    rules: Path = DEFAULT_RULES
    output_dir: Path = Path("output")
    report_dir: Path = Path("output/reports")


class RegisterColumns(BaseModel):
    title_number: str = "Title Number"
    address: str = "Property Address"
    country: str = "Country Incorporated (1)"
    price: str = "Price Paid"
    region: str = "Region"


class OnspdColumns(BaseModel):
    postcode: str = "pcds"
    oa: str = "oa11"
    lsoa: str = "lsoa11"
    msoa: str = "msoa11"
    lad: str = "oslaua"
    # Blank disables the England and Wales filter.
    country: str = "ctry"


class PricePaidColumns(BaseModel):
    postcode: str = "postcode"
    paon: str = "paon"
    saon: str = "saon"
    street: str = "street"
    locality: str = "locality"
    town: str = "town"
    price: str = "price"


class VoaColumns(BaseModel):
    postcode: str = "postcode"
    number_or_name: str = "number_or_name"
    street: str = "street"
    town: str = "town"
    description: str = "primary_description_text"


class SeriesColumns(BaseModel):
    area: str = "area_code"
    value: str = "value"
    adjacency_a: str = "area_a"
    adjacency_b: str = "area_b"


class ColumnSettings(BaseModel):
    """Header names of the external datasets."""
    register: RegisterColumns = Field(default_factory=RegisterColumns)
    onspd: OnspdColumns = Field(default_factory=OnspdColumns)
    pricepaid: PricePaidColumns = Field(default_factory=PricePaidColumns)
    voa: VoaColumns = Field(default_factory=VoaColumns)
    series: SeriesColumns = Field(default_factory=SeriesColumns)


class LabellingSettings(BaseModel):
    resolver: Resolver = Resolver.LARGEST
    hmm_tol: float = Field(default=1e-4, gt=0)
    hmm_max_iter: int = Field(default=50, ge=1)
    hmm_smoothing: float = Field(default=1e-3, gt=0)
    seed: int = 42
    workers: int = Field(default=1, ge=1)
    model_path: Optional[Path] = None


class ExpansionSettings(BaseModel):
    range_cap: int = Field(default=500, ge=1)


class ClassificationSettings(BaseModel):
    class_labels: ClassLabels = ClassLabels.TYPE2
    area_density: bool = True
    steps_file: Path = DEFAULT_CLASSIFICATION_STEPS


class AnalysisSettings(BaseModel):
    replicates: int = Field(default=501, ge=1)
    seed: int = 42
    weight_mode: WeightMode = WeightMode.ROW
    level: AreaLevel = AreaLevel.LSOA
    region: Optional[str] = None
    lad_fallback: bool = False
    # VOA description codes that never denote an occupiable premises.
    voa_exclusions: list[str] = Field(
        default_factory=lambda: ["ADVERTISING RIGHT", "ADVERTISING HOARDING", "CAR PARKING SPACE"]
    )


class Settings(BaseSettings):
    """Pipeline settings loaded from config file and environment."""

    DEBUG: bool = False
    PATHS: PathSettings = Field(default_factory=PathSettings)
    COLUMNS: ColumnSettings = Field(default_factory=ColumnSettings)
    LABELLING: LabellingSettings = Field(default_factory=LabellingSettings)
    EXPANSION: ExpansionSettings = Field(default_factory=ExpansionSettings)
    CLASSIFICATION: ClassificationSettings = Field(default_factory=ClassificationSettings)
    ANALYSIS: AnalysisSettings = Field(default_factory=AnalysisSettings)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="OCOD_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    def snapshot(self) -> dict[str, Any]:
        """JSON-safe copy of every value, for run manifests."""
        return self.model_dump(mode="json")


def _deep_merge(base: dict[str, Any], extra: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse a TOML config file; section names are matched case-insensitively."""
    path = Path(path)
    if not path.is_file():
        raise InputFileError(path, "config file not found")
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return {key.upper(): value for key, value in data.items()}


def load_settings(
    config_path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Settings:
    """Build settings from an optional config file plus CLI overrides."""
    values: dict[str, Any] = {}
    if config_path is not None:
        values = read_config_file(config_path)
    if overrides:
        values = _deep_merge(values, {k.upper(): v for k, v in overrides.items()})
    try:
        return Settings(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"]).lower()
        raise ConfigurationError(f"invalid value for '{key}': {first['msg']}") from exc
