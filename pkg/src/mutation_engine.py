"""
Mutation Engine

Produces the next mutant of an episode: samples an instruction, renders the
prompt, asks a mutation provider (a chat-completion endpoint or the
deterministic stub) and extracts the code from the answer.
"""

import logging
import random
import re
import time
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any, Callable, Union

import requests

from core_model import (
    MutationInstruction, LanguageProfile, SourceProgram, Strategy, Category, Deadness,
)
from errors import (
    NoEligibleInstruction, ProviderTimeout, ProviderUnavailable, ExtractionFailed,
)
from languages import get_profile, defines_function, has_control_flow
from stub_rules import StubRule, default_rules

logger = logging.getLogger(__name__)

PROMPT_TEMPLATE = "Given the following {language} program, please {instruction}:\n\n{code}"

REMOTE = "remote"
STUB = "stub"

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_OPEN_FENCE = re.compile(r"```[^\n`]*\n(.*)\Z", re.DOTALL)
# Lines kept when trimming prose around bare code: punctuation, comments,
# preprocessor and attribute lines, and lines opening with a declaration keyword
_CODE_LINE = re.compile(
    r"[{}();]|^\s*(?:#|//|/\*|\*|@"
    r"|(?:import|use|using|extern|mod|typedef|static|const|let|var|struct|enum|union|class|func|fn|pub)\b)"
)


@dataclass
class ProviderSettings:
    """
    Configuration of a mutation provider.

    kind is "remote" (chat-completion endpoint) or "stub" (deterministic rules).
    sampling is passed through to the endpoint untouched (temperature, top_p, ...).
    """
    kind: str = STUB
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    request_timeout: float = 120.0
    sampling: Dict[str, Any] = field(default_factory=dict)
    api_key: Optional[str] = None
    max_retries: int = 3
    backoff_base: float = 2.0


@dataclass(frozen=True)
class PromptRequest:
    language: str
    instruction: MutationInstruction
    code: str
    rendered_prompt: str


# ============================================================
# SEEDS, SAMPLING, PROMPTS
# ============================================================

def seed_for(language: str, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> SourceProgram:
    """
    Step-0 program for a language.

    Raises:
        UnknownLanguage: If no profile is configured for the language
    """
    profile = get_profile(language, overrides)
    return SourceProgram(language=profile.id, code=profile.seed_code)


def eligible_instructions(
    strategy: Strategy,
    catalog: List[MutationInstruction],
    code: Optional[str] = None,
    profile: Optional[LanguageProfile] = None,
) -> List[MutationInstruction]:
    """Catalog subset the strategy allows for the current code, in catalog order"""
    eligible = list(catalog)
    if strategy is Strategy.DEAD_CODE:
        eligible = [i for i in eligible if i.deadness is Deadness.DEAD]
    if code is not None and profile is not None and not has_control_flow(code, profile):
        eligible = [i for i in eligible if i.category is not Category.CONDITIONALS]
    return eligible


def sample_instruction(
    strategy: Strategy,
    rng: random.Random,
    catalog: List[MutationInstruction],
    code: Optional[str] = None,
    profile: Optional[LanguageProfile] = None,
) -> MutationInstruction:
    """
    Draw one instruction uniformly from the eligible subset.

    Args:
        strategy: Active differential strategy (DeadCode keeps only Dead instructions)
        rng: Episode random generator
        catalog: Instruction catalog
        code: Current code; Conditionals instructions need an existing loop/if
        profile: Language profile used for the keyword scan

    Raises:
        NoEligibleInstruction: If nothing is eligible
    """
    eligible = eligible_instructions(strategy, catalog, code, profile)
    if not eligible:
        raise NoEligibleInstruction(
            f"No eligible instruction for strategy {strategy.value} ({len(catalog)} in catalog)"
        )
    return rng.choice(eligible)


def instruction_text(instruction: MutationInstruction, profile: LanguageProfile) -> str:
    """Instruction wording for a language; unions become enumerations where needed"""
    if profile.id in instruction.per_language_text:
        return instruction.per_language_text[profile.id]
    if not profile.has_unions:
        return re.sub(r'\bunion\b', 'enumeration', instruction.text)
    return instruction.text


def build_prompt(profile: LanguageProfile, instruction: MutationInstruction, code: str) -> PromptRequest:
    """Render the single-turn mutation prompt"""
    rendered = PROMPT_TEMPLATE.format(
        language=profile.display_name,
        instruction=instruction_text(instruction, profile),
        code=code,
    )
    return PromptRequest(
        language=profile.id,
        instruction=instruction,
        code=code,
        rendered_prompt=rendered,
    )


# ============================================================
# PROVIDERS
# ============================================================

class RemoteLLMProvider:
    """Chat-completion style HTTP endpoint (one user message per call)."""

    def __init__(self, settings: ProviderSettings, sleep: Callable[[float], None] = time.sleep):
        if not settings.endpoint or not settings.model_name:
            raise ValueError("Remote provider requires both endpoint and model_name")
        self.settings = settings
        self.sleep = sleep
        self.session = requests.Session()
        self.session.headers.update({
            'Content-Type': 'application/json',
            'Accept': 'application/json',
        })
        if settings.api_key:
            self.session.headers['Authorization'] = f"Bearer {settings.api_key}"

    def payload(self, request: PromptRequest) -> Dict[str, Any]:
        data = dict(self.settings.sampling)
        data['model'] = self.settings.model_name
        data['messages'] = [{'role': 'user', 'content': request.rendered_prompt}]
        return data

    def complete(self, request: PromptRequest) -> str:
        """
        Send one completion request, retrying transport failures.

        Raises:
            ProviderTimeout: If the endpoint does not answer in time
            ProviderUnavailable: After max_retries failed retries
        """
        attempts = self.settings.max_retries + 1
        last_error = ""
        for attempt in range(attempts):
            if attempt > 0:
                delay = self.settings.backoff_base * (2 ** (attempt - 1))
                logger.warning(f"Provider retry {attempt}/{self.settings.max_retries} in {delay:.1f}s ({last_error})")
                self.sleep(delay)
            try:
                response = self.session.post(
                    self.settings.endpoint,
                    json=self.payload(request),
                    timeout=self.settings.request_timeout,
                )
            except requests.Timeout as e:
                raise ProviderTimeout(f"No answer from {self.settings.endpoint} within "
                                      f"{self.settings.request_timeout}s") from e
            except requests.RequestException as e:
                last_error = str(e)
                continue

            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise ProviderUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
            return self._content(response)

        raise ProviderUnavailable(
            f"{self.settings.endpoint} unavailable after {self.settings.max_retries} retries: {last_error}"
        )

    @staticmethod
    def _content(response: requests.Response) -> str:
        try:
            data = response.json()
        except ValueError as e:
            raise ProviderUnavailable(f"Response is not JSON: {response.text[:200]}") from e
        try:
            if 'choices' in data:
                return data['choices'][0]['message']['content']
            if 'message' in data:
                return data['message']['content']
            return data['content']
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"Unexpected response shape: {str(data)[:200]}") from e


class StubProvider:
    """Deterministic offline provider applying a rule table to the code."""

    def __init__(self, rules: Dict[str, StubRule], fence_language: str = ""):
        self.rules = dict(rules)
        self.fence_language = fence_language

    @classmethod
    def for_language(cls, profile: LanguageProfile) -> "StubProvider":
        return cls(default_rules(profile), fence_language=profile.id)

    def complete(self, request: PromptRequest) -> str:
        rule = self.rules.get(request.instruction.id)
        if rule is None:
            raise ProviderUnavailable(f"No stub rule for instruction '{request.instruction.id}'")
        mutated = rule(request.code)
        return f"Here is the updated program:\n```{self.fence_language}\n{mutated}\n```\n"


MutationProvider = Union[RemoteLLMProvider, StubProvider]


def make_provider(settings: ProviderSettings, profile: LanguageProfile) -> MutationProvider:
    if settings.kind == REMOTE:
        return RemoteLLMProvider(settings)
    if settings.kind == STUB:
        return StubProvider.for_language(profile)
    raise ValueError(f"Invalid provider kind '{settings.kind}'. Must be one of: {REMOTE}, {STUB}")


def mutate(provider: MutationProvider, request: PromptRequest) -> str:
    """Raw provider response for one prompt"""
    logger.debug(f"Mutating with {request.instruction.id} ({len(request.code)} chars)")
    return provider.complete(request)


# ============================================================
# CODE EXTRACTION
# ============================================================

def extract_code(raw_response: str, language: Union[str, LanguageProfile]) -> str:
    """
    Pull the program out of a provider response.

    The first fenced block wins. Without fences, the response is returned
    minus leading/trailing prose lines. Either way the result must define
    the function under test, so extracting twice gives the same text.

    Raises:
        ExtractionFailed: If no code can be recognized
    """
    profile = language if isinstance(language, LanguageProfile) else get_profile(language)

    match = _FENCE.search(raw_response) or _OPEN_FENCE.search(raw_response)
    if match:
        code = match.group(1).strip()
        if not code:
            raise ExtractionFailed("First fenced block is empty")
        if not defines_function(code, profile):
            raise ExtractionFailed(f"First fenced block does not define '{profile.function_symbol}'")
        return code

    if not defines_function(raw_response, profile):
        raise ExtractionFailed(
            f"No code block and no definition of '{profile.function_symbol}' in response"
        )
    lines = raw_response.strip().splitlines()
    code_lines = [i for i, line in enumerate(lines) if _CODE_LINE.search(line)]
    if not code_lines:
        raise ExtractionFailed("Response has no code-like lines")
    return '\n'.join(lines[code_lines[0]:code_lines[-1] + 1]).strip()
