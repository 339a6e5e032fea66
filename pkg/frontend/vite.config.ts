import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    target: "es2022",
    outDir: "dist",
  },
  test: {
    environment: "happy-dom",
    include: ["test/**/*.test.ts"],
    // the e2e spawns a backend process and waits on simulated time
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
