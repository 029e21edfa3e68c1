import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // The end-to-end test boots a real gateway subprocess and flies an
    // episode segment against it.
    testTimeout: 60_000,
    hookTimeout: 30_000,
  },
});
