# knockoff_rl package initializer
