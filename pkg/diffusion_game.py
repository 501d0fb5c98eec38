#!/usr/bin/env python3
"""
Point d'entrée en ligne de commande du modèle de diffusion de l'information.

Exemples :
    python diffusion_game.py predict --family regular --k 20 --pm 2
    python diffusion_game.py simulate --family er --kavg 20 --pm 3 --runs 100
    python diffusion_game.py invert --p-star 0.53 --mode large_k
"""

import sys
from pathlib import Path

# Ajouter le répertoire du projet au chemin Python
project_root = Path(__file__).parent
sys.path.append(str(project_root))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
