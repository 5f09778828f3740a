"""
File service - CSV data files, JSON reports and model files.

Data files carry a header; column roles come from the names: `y`, `x`,
`z_1..z_p`, `v_1..v_d` and optionally a weight column (default `w`).
"""
import logging
import re
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from cspcr.core.exceptions import FileFormatError, NonFiniteError
from cspcr.models.enums import Population
from cspcr.schemas.dataset import SourceDataset, UnlabeledPool
from cspcr.schemas.ratio import RatioModelFile, SamplerModelFile
from cspcr.schemas.report import ReportFile, TestReport
from cspcr.schemas.simulation import RejectionRateRow
from cspcr.services.dataset_service import DatasetService

logger = logging.getLogger(__name__)

INDEXED_COLUMN = re.compile(r"^([zv])_(\d+)$")
RATE_COLUMNS = ["sweep_param", "sweep_value", "method", "reps", "reject_rate", "mc_se", "errors_count"]


class FileService:
    """Service for reading and writing the command-line file formats."""

    def __init__(self, dataset_service: DatasetService):
        self.dataset_service = dataset_service

    # ============== Data Files ==============

    def read_dataset(
        self,
        path: str | Path,
        weight_col: str | None = None,
    ) -> tuple[SourceDataset, np.ndarray | None]:
        """Labeled rows plus the weight column when `weight_col` is given."""
        frame = self._read_csv(path)
        allowed = {"y", "x", "w"} | ({weight_col} if weight_col else set())
        z_cols, v_cols = self._roles(frame, path, allowed)
        for required in ("y", "x"):
            if required not in frame.columns:
                raise FileFormatError(f"{path}: missing required column {required!r}")
        if weight_col and weight_col not in frame.columns:
            raise FileFormatError(f"{path}: weight column {weight_col!r} not found")

        dataset = SourceDataset(
            y=frame["y"].to_numpy(dtype=float),
            x=frame["x"].to_numpy(dtype=float),
            z=frame[z_cols].to_numpy(dtype=float).reshape(len(frame), len(z_cols)),
            v=frame[v_cols].to_numpy(dtype=float).reshape(len(frame), len(v_cols)),
        )
        self.dataset_service.validate_dataset(dataset)
        weights = None
        if weight_col:
            weights = frame[weight_col].to_numpy(dtype=float)
            bad = np.flatnonzero(~np.isfinite(weights))
            if bad.size:
                raise NonFiniteError(int(bad[0]), weight_col)
            negative = np.flatnonzero(weights < 0)
            if negative.size:
                raise FileFormatError(
                    f"{path}: weight column {weight_col!r} is negative at row {int(negative[0])}"
                )
        logger.debug("Read %d rows from %s", dataset.n, path)
        return dataset, weights

    def read_pool(self, path: str | Path, population: Population) -> UnlabeledPool:
        """Unlabeled rows; `y` and `w` columns are ignored when present."""
        frame = self._read_csv(path)
        z_cols, v_cols = self._roles(frame, path, {"x", "y", "w"})
        if "x" not in frame.columns:
            raise FileFormatError(f"{path}: missing required column 'x'")
        pool = UnlabeledPool(
            population=population,
            x=frame["x"].to_numpy(dtype=float),
            z=frame[z_cols].to_numpy(dtype=float).reshape(len(frame), len(z_cols)),
            v=frame[v_cols].to_numpy(dtype=float).reshape(len(frame), len(v_cols)),
        )
        return self.dataset_service.validate_pool(pool)

    @staticmethod
    def write_dataset(dataset: SourceDataset, path: str | Path, weights=None) -> None:
        columns = {"y": dataset.y, "x": dataset.x}
        columns.update({f"z_{i + 1}": dataset.z[:, i] for i in range(dataset.p)})
        columns.update({f"v_{i + 1}": dataset.v[:, i] for i in range(dataset.d)})
        if weights is not None:
            columns["w"] = np.asarray(weights, dtype=float)
        pd.DataFrame(columns).to_csv(path, index=False)

    @staticmethod
    def write_pool(pool: UnlabeledPool, path: str | Path) -> None:
        columns = {"x": pool.x}
        columns.update({f"z_{i + 1}": pool.z[:, i] for i in range(pool.z.shape[1])})
        columns.update({f"v_{i + 1}": pool.v[:, i] for i in range(pool.v.shape[1])})
        pd.DataFrame(columns).to_csv(path, index=False)

    # ============== JSON Files ==============

    def write_report(self, report: TestReport, path: str | Path) -> str:
        text = ReportFile.from_report(report).to_json()
        self._write_text(path, text)
        return text

    def read_report(self, path: str | Path) -> ReportFile:
        return self._read_model(path, ReportFile)

    def write_model(self, model: RatioModelFile | SamplerModelFile, path: str | Path) -> None:
        self._write_text(path, model.model_dump_json(indent=2))

    def read_ratio_model(self, path: str | Path) -> RatioModelFile:
        return self._read_model(path, RatioModelFile)

    def read_sampler_model(self, path: str | Path) -> SamplerModelFile:
        return self._read_model(path, SamplerModelFile)

    # ============== Rate Tables ==============

    @staticmethod
    def write_rates(rows: Sequence[RejectionRateRow], path: str | Path) -> None:
        frame = pd.DataFrame(
            [row.model_dump(mode="json") for row in rows], columns=RATE_COLUMNS
        )
        frame.to_csv(path, index=False)

    # ============== Helpers ==============

    @staticmethod
    def _read_csv(path: str | Path) -> pd.DataFrame:
        try:
            frame = pd.read_csv(path, sep=",", decimal=".", encoding="utf-8")
        except FileNotFoundError as exc:
            raise FileFormatError(f"File not found: {path}") from exc
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise FileFormatError(f"{path}: cannot parse CSV ({exc})") from exc
        non_numeric = [c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])]
        if len(frame) and non_numeric:
            raise FileFormatError(f"{path}: non-numeric values in column {non_numeric[0]!r}")
        return frame

    @staticmethod
    def _roles(frame: pd.DataFrame, path, allowed: set[str]) -> tuple[list[str], list[str]]:
        indexed: dict[str, dict[int, str]] = {"z": {}, "v": {}}
        for column in frame.columns:
            match = INDEXED_COLUMN.match(str(column))
            if match:
                indexed[match.group(1)][int(match.group(2))] = column
            elif column not in allowed:
                raise FileFormatError(f"{path}: unexpected column {column!r}")
        ordered = []
        for role in ("z", "v"):
            indices = sorted(indexed[role])
            if indices != list(range(1, len(indices) + 1)):
                raise FileFormatError(f"{path}: {role} columns must be numbered 1..{len(indices)}")
            ordered.append([indexed[role][i] for i in indices])
        return ordered[0], ordered[1]

    @staticmethod
    def _read_model(path: str | Path, schema: type[BaseModel]):
        try:
            return schema.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise FileFormatError(f"File not found: {path}") from exc
        except ValidationError as exc:
            raise FileFormatError(f"{path}: invalid {schema.__name__}: {exc}") from exc

    @staticmethod
    def _write_text(path: str | Path, text: str) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text + "\n", encoding="utf-8")
