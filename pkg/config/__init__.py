"""Run configuration: JSON file, CLI overrides and dotenv environment"""
