# ABOUTME: cocycle-lab test package
# ABOUTME: Unit tests per module plus slow end-to-end checks of the limit theorems
