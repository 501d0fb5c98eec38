"""
Module errors.py

Hiérarchie d'exceptions du paquet. Toutes les erreurs de validation dérivent
de ValueError, comme les contrôles d'entrée du reste du code.
"""


class DiffusionGameError(Exception):
    """Exception de base du paquet."""


class PreconditionError(DiffusionGameError, ValueError):
    """Précondition d'une opération violée (paramètres ou état invalides)."""


class DegenerateCaseError(PreconditionError):
    """Formule fermée indéfinie (dénominateur nul, κ ≤ 2, égalité de gains)."""


class NotAFixedPointError(PreconditionError):
    """Jacobienne demandée en un point qui n'est pas un point fixe."""


class GraphParseError(DiffusionGameError, ValueError):
    """
    Ligne mal formée dans une liste d'arêtes.

    Args:
        line_number: Numéro (à partir de 1) de la ligne fautive
        line: Contenu brut de la ligne
    """

    def __init__(self, line_number, line):
        self.line_number = line_number
        self.line = line
        super().__init__(f"Malformed edge-list line {line_number}: {line!r} (expected two non-negative integers)")


class SimulationInvariantError(DiffusionGameError, RuntimeError):
    """Les compteurs incrémentaux ne correspondent plus à un recomptage complet."""


class GraphConstructionError(DiffusionGameError, RuntimeError):
    """Le générateur n'a pas produit de graphe simple dans le budget de tentatives."""
