"""Adaptive multilingual tutoring service.

Learners are profiled into one of five learning styles, cycled through
pre-test, styled lesson, and post-test for each concept of a content
pack, and advanced or remediated by a production-rule policy.  All
learner history is an append-only event log.
"""

__version__ = "1.0.0"
