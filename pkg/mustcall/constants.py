"""
Constants for the must-call checker.
Centralizes magic numbers, names and the built-in library specifications.
"""

from typing import Dict, FrozenSet, Tuple


class Constants:
    """Centralized constants for the checker."""

    # Release methods recognized by name at call sites
    RELEASE_METHOD_NAMES: FrozenSet[str] = frozenset({"Close", "Dispose"})
    DEFAULT_RELEASE_METHOD = "Dispose"

    # Interface whose implementers are resources
    DISPOSABLE_INTERFACE = "IDisposable"

    # Built-in generic collection (the only generic type)
    COLLECTION_TYPE = "List"
    COLLECTION_TYPE_PARAMETER = "T"

    # Scalar types carry no resource value
    SCALAR_TYPES: FrozenSet[str] = frozenset({"int", "bool", "string", "double", "void"})
    INFERRED_TYPE = "var"

    # Constructor key suffix in qualified method names
    CONSTRUCTOR_NAME = "<ctor>"

    # Path limits
    WITNESS_MAX_NODES = 64
    ORACLE_PATH_CAP = 1_000_000
    ORACLE_BACK_EDGE_BOUND = 1

    # Random program generation
    GENERATOR_MAX_STATEMENTS = 12
    GENERATOR_MAX_DEPTH = 2
    GENERATOR_MAX_SOCKETS = 3
    GENERATOR_MAX_REDRAWS = 50

    # Output
    JSON_FORMAT_VERSION = 1
    SEVERITY = "warning"
    RULE_PREFIX = "resource-leak"

    # File extensions
    SOURCE_FILE_EXTENSION = ".moo"
    OVERLAY_FILE_EXTENSION = ".rmspec"
    EXPECTED_FILE_NAME = "expected.json"

    # Exit codes
    EXIT_CLEAN = 0
    EXIT_LEAKS = 1
    EXIT_USAGE = 2

    # Environment
    NO_COLOR_ENV_VAR = "MUSTCALL_NO_COLOR"

    # ANSI colors
    ANSI_COLORS: Dict[str, str] = {
        "warning": "\033[33m",
        "error": "\033[31m",
        "reset": "\033[0m",
    }

    # Built-in library file identifier
    BUILTIN_PATH = "<builtin>"

    # Specifications for the library types corpus programs use without defining
    BUILTIN_PRELUDE = """
class Exception { }

class Encoding { }

class List {
    void Add(T item) { }
    T Get(int index) { return null; }
    int Count() { return 0; }
}

class Socket : IDisposable {
    void Connect(string host) { }
    void Dispose() { }
    void Close() { }
}

class Stream : IDisposable {
    int Read() { return 0; }
    void Dispose() { }
    void Close() { }
}

class StreamReader : IDisposable {
    [MustCallAlias]
    StreamReader([MustCallAlias] Stream stream, string encoding) { }
    string ReadLine() { return null; }
    void Dispose() { }
    void Close() { }
}

class SqlConnection : IDisposable {
    void Open() { }
    void Dispose() { }
    void Close() { }
}

class SqlDataReader : IDisposable {
    bool Read() { return false; }
    void Dispose() { }
    void Close() { }
}

class SqlCommand : IDisposable {
    SqlConnection Connection;
    [Owning]
    SqlDataReader ExecuteReader(int behavior) { return null; }
    void Dispose() { }
    void Close() { }
}
"""

    # Source kinds in report ordering
    SOURCE_KIND_ORDER: Tuple[str, ...] = (
        "ObjectCreation",
        "OwningReturnCall",
        "CreateMustCallForCall",
        "OwningParameter",
        "OwningField",
        "CreateMustCallFor",
    )
