from pathlib import Path

import yaml

HOME_PATH = Path(__file__).resolve().parent.parent
CONFIG_PATH = Path(HOME_PATH, 'config.yml')

config = {}
if CONFIG_PATH.is_file():
    with open(CONFIG_PATH, 'r') as file:
        config = yaml.safe_load(file) or {}
