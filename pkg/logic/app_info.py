"""Application metadata constants used by the command line."""

APP_NAME = "rasolver"
APP_VERSION = "1.0.0"
RELEASE_DATE = "2026-10-18"
