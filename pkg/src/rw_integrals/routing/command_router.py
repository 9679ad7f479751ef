"""Command router: dispatch of CLI commands with parameter validation."""

from typing import Any, Callable, Dict, List, Optional, Tuple

from ..logging.logger import get_logger
from ..models.exceptions import CommandNotFoundError, InvalidParameterError, ValidationError

logger = get_logger(__name__)

DERIVATIVE_PAIRS_ALL = "all"


def parse_derivative(text: str) -> Tuple[int, int]:
    """'k,p' -> (k, p) with k in {1, 2} and p >= 1."""
    parts = [part.strip() for part in str(text).split(",")]
    if len(parts) != 2 or not all(part.isdigit() for part in parts):
        raise InvalidParameterError("deriv", f"Derivative must look like 'k,p', got '{text}'")
    k, p = int(parts[0]), int(parts[1])
    if k not in (1, 2) or p < 1:
        raise InvalidParameterError("deriv", f"Derivative needs k in {{1, 2}} and p >= 1, got '{text}'")
    return k, p


def parse_pairs(text: str) -> Optional[List[Tuple[Tuple[int, int], Tuple[int, int]]]]:
    """'all' -> None; 'k,p:l,q;k,p:l,q' -> list of derivative pairs."""
    if text.strip().lower() == DERIVATIVE_PAIRS_ALL:
        return None
    pairs = []
    for item in text.split(";"):
        halves = item.split(":")
        if len(halves) != 2:
            raise InvalidParameterError("pairs", f"Pair must look like 'k,p:l,q', got '{item}'")
        pairs.append((parse_derivative(halves[0]), parse_derivative(halves[1])))
    return pairs


class CommandRouter:
    """Router for CLI commands with handler dispatch and parameter validation."""

    def __init__(self):
        self._handlers: Dict[str, Callable] = {}
        self._parameter_schemas: Dict[str, Dict[str, Any]] = {}
        self._setup_parameter_schemas()

    def _setup_parameter_schemas(self) -> None:
        """Set up parameter validation schemas for each command."""
        common = {
            "config_path": {"type": str, "required": True, "min_length": 1},
        }
        self._parameter_schemas = {
            "validate": dict(common),
            "identities": {
                **common,
                "seed": {"type": int, "required": False, "default": None, "min": 0},
                "samples": {"type": int, "required": False, "default": None, "min": 1, "max": 100000},
                "tolerance": {"type": float, "required": False, "default": None, "min": 0.0},
                "checks": {"type": list, "required": False, "default": None, "min_length": 1},
            },
            "connection": {
                **common,
                "deriv": {"type": str, "required": True},
                "out": {"type": str, "required": False, "default": None},
                "csv": {"type": str, "required": False, "default": None},
            },
            "flatness": {
                **common,
                "pairs": {"type": str, "required": False, "default": DERIVATIVE_PAIRS_ALL},
                "h": {"type": float, "required": False, "default": None, "min": 0.0},
                "tolerance": {"type": float, "required": False, "default": None, "min": 0.0},
            },
            "verify-ode": {
                **common,
                "cycle": {"type": str, "required": False, "default": None},
                "radius": {"type": float, "required": False, "default": None, "min": 0.0},
                "deriv": {"type": list, "required": False, "default": None, "min_length": 1},
                "h": {"type": float, "required": False, "default": None, "min": 0.0},
                "h_sweep": {"type": bool, "required": False, "default": False},
                "tolerance": {"type": float, "required": False, "default": None, "min": 0.0},
            },
        }

    def register_handler(self, command: str, handler: Callable) -> None:
        """
        Register a handler for a command.

        Raises:
            ValidationError: If the command has no schema or handler is not callable
        """
        if command not in self._parameter_schemas:
            raise ValidationError(f"No parameter schema for command '{command}'", field="command")
        if not callable(handler):
            raise ValidationError("Handler must be callable", field="handler")
        logger.debug("Registering command handler", command=command)
        self._handlers[command] = handler

    def route(self, command: str, params: Dict[str, Any], **context) -> Any:
        """
        Validate parameters and call the handler of `command`.

        Keyword `context` (for example the run report) is passed to the handler
        unvalidated.

        Raises:
            CommandNotFoundError: If the command is not registered
            InvalidParameterError: If a parameter is missing, unknown or out of range
        """
        if command not in self._handlers:
            raise CommandNotFoundError(
                command, f"Command '{command}' not found. Available commands: {self.get_registered_commands()}"
            )
        validated = self.validate_params(command, params)
        logger.debug("Dispatching command", command=command)
        return self._handlers[command](**validated, **context)

    def validate_params(self, command: str, params: Dict[str, Any]) -> Dict[str, Any]:
        """Check parameters against the command schema and fill in defaults."""
        if command not in self._parameter_schemas:
            raise CommandNotFoundError(command)
        schema = self._parameter_schemas[command]

        unknown = set(params) - set(schema)
        if unknown:
            raise InvalidParameterError(
                sorted(unknown)[0],
                f"Unknown parameters for '{command}': {sorted(unknown)}. Valid parameters: {list(schema)}"
            )

        validated: Dict[str, Any] = {}
        for name, rules in schema.items():
            value = params.get(name)
            if value is None:
                if rules.get("required", False):
                    raise InvalidParameterError(name, f"Required parameter '{name}' is missing for '{command}'")
                validated[name] = rules.get("default")
                continue

            expected = rules["type"]
            if expected is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
                raise InvalidParameterError(
                    name, f"Parameter '{name}' for '{command}' must be of type {expected.__name__}, "
                          f"got {type(value).__name__}"
                )

            if expected in (int, float):
                self._validate_number(command, name, value, rules)
            elif expected in (str, list):
                self._validate_length(command, name, value, rules)
            validated[name] = value

        if command == "connection":
            parse_derivative(validated["deriv"])
        elif command == "flatness":
            parse_pairs(validated["pairs"])
        elif command == "verify-ode" and validated["deriv"]:
            for item in validated["deriv"]:
                parse_derivative(item)
        return validated

    def _validate_number(self, command: str, name: str, value, rules: Dict[str, Any]) -> None:
        if "min" in rules:
            strict = rules["type"] is float
            if value < rules["min"] or (strict and value == rules["min"]):
                relation = "greater than" if strict else "at least"
                raise InvalidParameterError(
                    name, f"Parameter '{name}' for '{command}' must be {relation} {rules['min']}"
                )
        if "max" in rules and value > rules["max"]:
            raise InvalidParameterError(name, f"Parameter '{name}' for '{command}' must be at most {rules['max']}")

    def _validate_length(self, command: str, name: str, value, rules: Dict[str, Any]) -> None:
        if "min_length" in rules and len(value) < rules["min_length"]:
            raise InvalidParameterError(
                name, f"Parameter '{name}' for '{command}' must have length at least {rules['min_length']}"
            )

    def get_registered_commands(self) -> List[str]:
        return list(self._handlers)

    def is_command_registered(self, command: str) -> bool:
        return command in self._handlers

    def get_command_schema(self, command: str) -> Optional[Dict[str, Any]]:
        return self._parameter_schemas.get(command)
