"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""


class NoSchema(LookupError):
    """The pool holds no interior node yet; the caller must bootstrap one."""


class NoAction(LookupError):
    """No action leaf is reachable from the selected node."""


class ConfigError(ValueError):
    pass
