"""Offline-first inventory management: event-sourced stock engine, scan label
codec, geolocation-assisted warehouse selection, and an idempotent sync
protocol behind a small HTTP/JSON API."""

__version__ = "0.1.0"
