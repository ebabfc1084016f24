# Test suite for rangewalk package
