import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 240_000,
    hookTimeout: 120_000,
    // the integration suite drives one live service; keep files sequential
    fileParallelism: false,
  },
});
