"""Surface-EMG eating analysis toolkit.

Offline chew/swallow window classification, a streaming chew detector with
live rate tracking, meal-structure metrics and a haptic pacing-feedback
mapping, all validated against seeded synthetic sessions.
"""

__version__ = "0.1.0"
