"""Standalone fixture generator: Gaussian-basis RHF plus FCIDUMP export."""

ENGINE_NAME = "fixturegen-mdhf"
ENGINE_VERSION = "1.0.0"
