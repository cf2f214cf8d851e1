"""Deep-ensemble evidence, prior providers and the posterior-controlled ordering loop"""
