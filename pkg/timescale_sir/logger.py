import logging

timescale_sir_logger = logging.getLogger("timescale_sir")
