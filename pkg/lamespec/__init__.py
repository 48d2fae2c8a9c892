"""Eigenvalues of the Lamé operator as analytic functions of the nome."""

import logging

from .config import Config

__version__ = "0.3.0"

logging.basicConfig(level=Config.LOG_LEVEL,
                    format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def create_app():
    """Create the Flask JSON API."""
    from flask import Flask

    app = Flask(__name__)
    app.config.from_object(Config)
    # JSON_SORT_KEYS takes effect through the JSON provider only
    app.json.sort_keys = app.config["JSON_SORT_KEYS"]

    from .routes import api
    app.register_blueprint(api)

    return app
