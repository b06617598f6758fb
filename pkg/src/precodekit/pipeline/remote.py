"""Remote chat-completion backend with strict stage schemas.

Requests carry a fixed per-stage system prompt and ask for a reply
constrained to the stage's JSON schema. A reply that fails validation is
retried with the validation error appended, up to ``max_attempts`` times.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import httpx
from pydantic import BaseModel, ConfigDict, Field, SecretStr, ValidationError

from ..errors import ConfigError, HttpError, SchemaViolation, Timeout
from .rules import check_spec_against
from .types import STAGE_MODELS, ImplementationPrompt, ProblemSpec, SolverPlan

API_KEY_ENV = "AGENTIC_LLM_API_KEY"
PROMPT_VERSION = "v1"


class RemoteConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    base_url: str = Field(min_length=1)
    model: str = Field(min_length=1)
    api_key: Optional[SecretStr] = None
    path: str = "/v1/chat/completions"
    timeout_s: float = Field(60.0, gt=0)
    max_inflight: int = Field(4, ge=1)
    max_attempts: int = Field(3, ge=1)

    @classmethod
    def from_settings(cls, settings: dict, env=None) -> "RemoteConfig":
        """Build from flat ``llm.*`` keys; the API key comes from the
        environment, which overrides the file."""
        env = os.environ if env is None else env
        values = {k.split(".", 1)[1]: v for k, v in settings.items() if k.startswith("llm.")}
        if env.get(API_KEY_ENV):
            values["api_key"] = env[API_KEY_ENV]
        if not values.get("api_key"):
            raise ConfigError(f"remote backend needs {API_KEY_ENV} to be set")
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(f"invalid llm settings: {exc}") from None


def system_prompt(stage: str, version: str = PROMPT_VERSION) -> str:
    return (resources.files("precodekit.pipeline") / "prompts" / f"{stage}.{version}.txt").read_text()


@dataclass
class Completion:
    value: BaseModel
    attempts: int
    errors: list[str] = field(default_factory=list)


class RemoteClient:
    """Thread-safe client; a semaphore bounds in-flight requests."""

    def __init__(self, config: RemoteConfig, transport: httpx.BaseTransport | None = None):
        if config.api_key is None:
            raise ConfigError(f"remote backend needs {API_KEY_ENV} to be set")
        self.config = config
        self._http = httpx.Client(base_url=config.base_url, transport=transport,
                                  timeout=httpx.Timeout(config.timeout_s))
        self._slots = threading.BoundedSemaphore(config.max_inflight)

    def close(self) -> None:
        self._http.close()

    def _post(self, body: dict) -> str:
        headers = {"Authorization": f"Bearer {self.config.api_key.get_secret_value()}"}
        with self._slots:
            try:
                resp = self._http.post(self.config.path, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                raise Timeout(f"no reply within {self.config.timeout_s:g} s") from exc
            except httpx.HTTPError as exc:
                raise HttpError(f"request failed: {exc}") from exc
        if resp.status_code >= 400:
            raise HttpError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            return resp.text

    def complete(self, stage: str, payload: str) -> Completion:
        model_cls = STAGE_MODELS[stage]
        messages = [{"role": "system", "content": system_prompt(stage)},
                    {"role": "user", "content": payload}]
        response_format = {"type": "json_schema",
                           "json_schema": {"name": stage, "strict": True,
                                           "schema": model_cls.model_json_schema()}}
        errors: list[str] = []
        for attempt in range(1, self.config.max_attempts + 1):
            text = self._post({"model": self.config.model, "messages": messages,
                               "response_format": response_format})
            try:
                return Completion(model_cls.model_validate_json(text), attempt, errors)
            except ValidationError as exc:
                errors.append(str(exc))
                messages = messages + [
                    {"role": "assistant", "content": text},
                    {"role": "user", "content": "The reply failed schema validation:\n"
                                                f"{exc}\nReturn only a corrected JSON object."}]
        raise SchemaViolation(f"{stage} output invalid after {self.config.max_attempts} "
                              f"attempts: {errors[-1]}")


def llm_complete(stage: str, payload: str, endpoint: RemoteConfig | RemoteClient,
                 transport: httpx.BaseTransport | None = None) -> BaseModel:
    """One validated stage completion; see ``RemoteClient.complete``."""
    if isinstance(endpoint, RemoteClient):
        return endpoint.complete(stage, payload).value
    client = RemoteClient(endpoint, transport)
    try:
        return client.complete(stage, payload).value
    finally:
        client.close()


class RemoteBackend:
    """Stage implementations backed by a remote model."""

    name = "remote"

    def __init__(self, client: RemoteClient):
        self.client = client
        self.warnings: list[str] = []

    def _call(self, stage: str, payload: dict):
        out = self.client.complete(stage, json.dumps(payload, sort_keys=True))
        if out.attempts > 1:
            self.warnings.append(f"{stage}: valid reply after {out.attempts} attempts")
        return out.value

    def formulate(self, D, theta) -> ProblemSpec:
        spec = self._call("formulate", {"task": D.text, "scenario": theta.to_dict()})
        check_spec_against(spec, theta)
        return spec

    def select_strategy(self, spec: ProblemSpec):
        from ..errors import UnknownStrategy
        from ..solvers.registry import registry_lookup
        strategy = self._call("select", {"spec": spec.model_dump(mode="json")})
        try:
            registry_lookup(strategy.strategy_id)
        except UnknownStrategy as exc:
            raise SchemaViolation(str(exc)) from None
        return strategy

    def upsample(self, theta, spec: ProblemSpec, strategy, tol: float = 1e-6) -> ImplementationPrompt:
        return self._call("upsample", {"scenario_id": theta.sys.scenario_id,
                                       "spec": spec.model_dump(mode="json"),
                                       "strategy": strategy.model_dump(mode="json"),
                                       "feasibility_tol": tol})

    def generate_plan(self, prompt: ImplementationPrompt) -> SolverPlan:
        plan = self._call("generate", {"prompt": prompt.model_dump(mode="json")})
        return plan.model_copy(update={"revision": 0})
