"""Exceptions shared across the toolkit."""


class ValidationError(ValueError):
    """Malformed input: a bad field value, a missing record, or an
    inconsistent scenario. Messages name the offending field and, where
    applicable, the record index."""


class ScarcityError(RuntimeError):
    """The bid stack cannot cover a reserve requirement."""

    def __init__(self, requirement_gw: float, offered_gw: float, unit_id: str | None = None):
        self.requirement_gw = requirement_gw
        self.offered_gw = offered_gw
        self.shortfall_gw = requirement_gw - offered_gw
        self.unit_id = unit_id
        msg = (
            f"reserve shortfall of {self.shortfall_gw:.9g} GW: requirement "
            f"{requirement_gw:.9g} GW exceeds offered volume {offered_gw:.9g} GW"
        )
        if unit_id is not None:
            msg = f"unit '{unit_id}': {msg}"
        super().__init__(msg)
